class EntmeasError(ValueError):
    """Base class for every error raised by entmeas."""


class NotHermitian(EntmeasError):
    pass


class WrongDimension(EntmeasError):
    pass


class NotPSD(EntmeasError):
    pass


class ZeroEffect(EntmeasError):
    pass


class VisibilityOutOfRange(EntmeasError):
    pass


class InvalidAssembly(EntmeasError):
    """A measurement assembly whose effects are not PSD or do not sum to the identity."""


class DimensionMismatch(EntmeasError):
    pass


class UnnormalizedTable(EntmeasError):
    pass


class BudgetExceeded(EntmeasError):
    """Strategy enumeration would visit more strategies than the configured budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} strategies, budget is {budget}")
        self.required = required
        self.budget = budget


class SingularNormalizer(EntmeasError):
    pass


class NoConvergence(EntmeasError):
    pass


class RatioOutOfRange(EntmeasError):
    pass


class WitnessParseError(EntmeasError):
    """A witness file that is not valid JSON or does not match the witness schema.

    Attributes:
        line: 1-based line of the offending token, when known
        column: 1-based column of the offending token, when known
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


class CountsParseError(EntmeasError):
    """A counts CSV or its JSON sidecar that cannot be read back into a CountTable."""

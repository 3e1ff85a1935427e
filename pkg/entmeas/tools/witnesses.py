import json
import logging
import math
from collections.abc import Callable
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from entmeas.config import get_settings
from entmeas.errors import DimensionMismatch, UnnormalizedTable, WitnessParseError
from entmeas.models import (
    BOUND_ORDER,
    NORMALIZATION_TOL,
    BoundDistance,
    CertificationVerdict,
    ProbabilityTable,
    WitnessDims,
    WitnessDocument,
    WitnessSpec,
    WitnessValue,
)

logger = logging.getLogger(__name__)


def witness_w() -> WitnessSpec:
    """Entangled-measurement witness: three preparations each, one ternary measurement.

    Returns:
        WitnessSpec with classical, LOCC and unentangled bounds 1 and quantum maximum 3/2
    """
    coefficients = np.zeros((3, 3, 3, 1))
    coefficients[0, :, :, 0] = [
        [1, -1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
    ]
    coefficients[1, :, :, 0] = [
        [1, -1, -1],
        [-1, -1, 1],
        [-1, 1, -1],
    ]
    return WitnessSpec(
        name="w",
        dims=WitnessDims(nx=3, ny=3, nz=1, nc=3),
        coefficients=coefficients,
        bounds={"classical": 1.0, "locc": 1.0, "unentangled": 1.0, "entangled_max": 1.5},
    )


def witness_v() -> WitnessSpec:
    """Unentangled-versus-classical witness: two dichotomic settings, weights on c=1 only."""
    coefficients = np.zeros((2, 3, 3, 2))
    coefficients[0, :, :, 0] = [
        [2, 0, 0],
        [0, -2, -2],
        [0, -2, -2],
    ]
    coefficients[0, :, :, 1] = [
        [0, 0, 0],
        [0, 1, -1],
        [0, -1, 1],
    ]
    return WitnessSpec(
        name="v",
        dims=WitnessDims(nx=3, ny=3, nz=2, nc=2),
        coefficients=coefficients,
        bounds={"classical": 2.0, "unentangled": 3.0},
    )


BUILTIN_WITNESSES: dict[str, Callable[[], WitnessSpec]] = {
    "w": witness_w,
    "v": witness_v,
}


def check_dims(spec: WitnessSpec, shape: tuple[int, ...]) -> None:
    if tuple(shape) != spec.dims.shape:
        raise DimensionMismatch(f"witness '{spec.name}' expects shape {spec.dims.shape}, got {tuple(shape)}")


def evaluate(spec: WitnessSpec, table: ProbabilityTable) -> WitnessValue:
    """Σ_{c,x,y,z} W_{c|x,y,z}·p(c|x,y,z).

    Raises:
        DimensionMismatch: If the table shape differs from the witness dims
        UnnormalizedTable: If some (x, y, z) group does not sum to 1 within 1e-8
    """
    check_dims(spec, table.values.shape)
    if not table.is_normalized(NORMALIZATION_TOL):
        worst = float(np.max(np.abs(table.values.sum(axis=0) - 1.0)))
        raise UnnormalizedTable(f"probabilities deviate from normalization by {worst:.3e}")
    return WitnessValue(value=float(np.sum(spec.coefficients * table.values)), witness=spec.name)


def _sigma_distance(value: float, bound: float, stderr: float) -> float:
    if stderr > 0:
        return (value - bound) / stderr
    if value == bound:
        return 0.0
    return math.copysign(math.inf, value - bound)


def verdict(
    spec: WitnessSpec,
    value: WitnessValue,
    stderr: float,
    significance: float | None = None,
) -> CertificationVerdict:
    """Rule out measurement classes whose bound the value exceeds by the significance.

    Args:
        spec: Witness with its class bounds
        value: Estimated witness value
        stderr: Standard error of the estimate (non-negative)
        significance: Threshold in standard errors; defaults to the configured 3σ

    Returns:
        Verdict listing the distance to every known bound and the strongest excluded class
    """
    if stderr < 0:
        raise ValueError(f"stderr must be non-negative, got {stderr}")
    threshold = significance if significance is not None else get_settings().significance

    distances = []
    strongest = None
    for label in BOUND_ORDER:
        if label not in spec.bounds:
            continue
        sigma = _sigma_distance(value.value, spec.bounds[label], stderr)
        excluded = sigma >= threshold
        distances.append(BoundDistance(bound_class=label, bound=spec.bounds[label], sigma=sigma, excluded=excluded))
        if excluded:
            strongest = label

    return CertificationVerdict(
        witness=spec.name,
        value=value.value,
        stderr=stderr,
        significance=threshold,
        distances=distances,
        strongest_excluded=strongest,
    )


def dump_witness(spec: WitnessSpec) -> str:
    return WitnessDocument.from_spec(spec).model_dump_json(indent=2)


def parse_witness(text: str) -> WitnessSpec:
    """Parse the sparse JSON witness format.

    Raises:
        WitnessParseError: With line and column for JSON syntax errors, or the
            failing field for schema errors
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WitnessParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    try:
        return WitnessDocument.model_validate(raw).to_spec()
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise WitnessParseError(f"{where}: {first['msg']}") from exc
    except ValueError as exc:
        raise WitnessParseError(str(exc)) from exc


def load_witness(path: Path) -> WitnessSpec:
    return parse_witness(path.read_text())


def resolve_witness(name_or_path: str) -> WitnessSpec:
    """Return a built-in witness by name, or load one from a JSON file."""
    if name_or_path in BUILTIN_WITNESSES:
        return BUILTIN_WITNESSES[name_or_path]()
    path = Path(name_or_path)
    if not path.is_file():
        known = sorted(BUILTIN_WITNESSES)
        raise WitnessParseError(f"'{name_or_path}' is neither a built-in witness {known} nor a file")
    logger.info("Loading witness from %s", path)
    return load_witness(path)

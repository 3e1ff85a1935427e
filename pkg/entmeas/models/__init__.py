from .base import COMPLETENESS_TOL, HERMITIAN_TOL, NORMALIZATION_TOL, PPT_THRESHOLD, PSD_TOL, ComplexMatrix
from .optimization import DEFAULT_RESTARTS, OptResult, RestartTrace, SeesawConfig, SeesawMode
from .quantum import (
    EffectClass,
    MeasurementAssembly,
    NoiseKind,
    PreparationFamily,
    QubitPreparation,
    VisibilityModel,
)
from .report import CertificationReport, CharacterizationTable, Provenance, SimulationSummary, SweepReport
from .statistics import CharacterizationRow, CountSidecar, CountTable, SplittingRatios
from .strategies import BoundResult, ClassicalStrategy
from .witness import (
    BOUND_ORDER,
    BoundClass,
    BoundDistance,
    CertificationVerdict,
    CoefficientEntry,
    ProbabilityTable,
    WitnessDims,
    WitnessDocument,
    WitnessSpec,
    WitnessValue,
)

__all__ = [
    "BOUND_ORDER",
    "COMPLETENESS_TOL",
    "DEFAULT_RESTARTS",
    "HERMITIAN_TOL",
    "NORMALIZATION_TOL",
    "PPT_THRESHOLD",
    "PSD_TOL",
    "BoundClass",
    "BoundDistance",
    "BoundResult",
    "CertificationReport",
    "CertificationVerdict",
    "CharacterizationRow",
    "CharacterizationTable",
    "ClassicalStrategy",
    "CoefficientEntry",
    "ComplexMatrix",
    "CountSidecar",
    "CountTable",
    "EffectClass",
    "MeasurementAssembly",
    "NoiseKind",
    "OptResult",
    "PreparationFamily",
    "ProbabilityTable",
    "Provenance",
    "QubitPreparation",
    "RestartTrace",
    "SeesawConfig",
    "SeesawMode",
    "SimulationSummary",
    "SplittingRatios",
    "SweepReport",
    "VisibilityModel",
    "WitnessDims",
    "WitnessDocument",
    "WitnessSpec",
    "WitnessValue",
]

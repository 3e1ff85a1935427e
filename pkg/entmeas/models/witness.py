import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from entmeas.models.base import NORMALIZATION_TOL, ArrayModel, RealTensor

BoundClass = Literal["classical", "locc", "unentangled", "entangled_max"]

# Inclusion order of measurement classes, weakest first.
BOUND_ORDER: tuple[BoundClass, ...] = ("classical", "locc", "unentangled", "entangled_max")


class WitnessDims(BaseModel):
    """Scenario sizes: preparations per party, settings and outcomes."""

    model_config = ConfigDict(extra="forbid")

    nx: int = Field(ge=1, description="Number of Alice preparations")
    ny: int = Field(ge=1, description="Number of Bob preparations")
    nz: int = Field(ge=1, description="Number of measurement settings")
    nc: int = Field(ge=1, description="Number of outcomes per setting")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        """Tensor shape in axis order (c, x, y, z)."""
        return (self.nc, self.nx, self.ny, self.nz)

    @classmethod
    def from_shape(cls, shape: tuple[int, ...]) -> "WitnessDims":
        nc, nx, ny, nz = shape
        return cls(nx=nx, ny=ny, nz=nz, nc=nc)


class ProbabilityTable(ArrayModel):
    """Observed or predicted p(c|x,y,z), stored with axis order (c, x, y, z)."""

    values: RealTensor = Field(description="Probabilities indexed [c-1, x, y, z]")

    @field_validator("values")
    @classmethod
    def _four_axes(cls, values: np.ndarray) -> np.ndarray:
        if values.ndim != 4:
            raise ValueError(f"probability table needs 4 axes (c, x, y, z), got {values.ndim}")
        return values

    @property
    def dims(self) -> WitnessDims:
        return WitnessDims.from_shape(self.values.shape)

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return bool(np.all(np.abs(self.values.sum(axis=0) - 1.0) <= tol))

    def mix(self, other: "ProbabilityTable", weight: float) -> "ProbabilityTable":
        """Return ``weight * self + (1 - weight) * other``."""
        return ProbabilityTable(values=weight * self.values + (1.0 - weight) * other.values)


class WitnessSpec(ArrayModel):
    """A linear witness over p(c|x,y,z) together with its known class bounds."""

    name: str = Field(description="Witness identifier")
    dims: WitnessDims
    coefficients: RealTensor = Field(description="Coefficients indexed [c-1, x, y, z]")
    bounds: dict[BoundClass, float] = Field(default_factory=dict, description="Maximum value per measurement class")

    @model_validator(mode="after")
    def _check_consistency(self) -> "WitnessSpec":
        if self.coefficients.shape != self.dims.shape:
            raise ValueError(f"coefficient shape {self.coefficients.shape} does not match dims {self.dims.shape}")
        present = [self.bounds[label] for label in BOUND_ORDER if label in self.bounds]
        if any(lower > upper for lower, upper in zip(present, present[1:], strict=False)):
            raise ValueError(f"bounds must be monotone in {BOUND_ORDER}: {self.bounds}")
        return self


class CoefficientEntry(BaseModel):
    """One non-zero witness coefficient; ``c`` is 1-based."""

    model_config = ConfigDict(extra="forbid")

    c: int = Field(ge=1)
    x: int = Field(ge=0)
    y: int = Field(ge=0)
    z: int = Field(default=0, ge=0)
    value: float


class WitnessDocument(BaseModel):
    """On-disk witness format: explicit sparse entries, missing entries are zero."""

    model_config = ConfigDict(extra="forbid")

    name: str
    dims: WitnessDims
    coefficients: list[CoefficientEntry] = Field(default_factory=list)
    bounds: dict[BoundClass, float] = Field(default_factory=dict)

    @classmethod
    def from_spec(cls, spec: WitnessSpec) -> "WitnessDocument":
        entries = [
            CoefficientEntry(c=int(c) + 1, x=int(x), y=int(y), z=int(z), value=float(spec.coefficients[c, x, y, z]))
            for c, x, y, z in zip(*np.nonzero(spec.coefficients), strict=True)
        ]
        return cls(name=spec.name, dims=spec.dims, coefficients=entries, bounds=dict(spec.bounds))

    def to_spec(self) -> WitnessSpec:
        tensor = np.zeros(self.dims.shape)
        for entry in self.coefficients:
            if entry.c > self.dims.nc or entry.x >= self.dims.nx or entry.y >= self.dims.ny or entry.z >= self.dims.nz:
                raise ValueError(f"coefficient {entry.model_dump()} lies outside dims {self.dims.model_dump()}")
            tensor[entry.c - 1, entry.x, entry.y, entry.z] += entry.value
        return WitnessSpec(name=self.name, dims=self.dims, coefficients=tensor, bounds=dict(self.bounds))


class WitnessValue(BaseModel):
    """Value of a named witness on some probability table."""

    value: float
    witness: str

    @field_validator("value")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("witness value must be finite")
        return value


class BoundDistance(BaseModel):
    """Signed distance of a witness value from one class bound, in standard errors."""

    bound_class: BoundClass
    bound: float
    sigma: float = Field(description="(value - bound) / stderr; ±inf when stderr is zero")
    excluded: bool = Field(description="Whether the distance reaches the configured significance")


VERDICT_LABELS: dict[BoundClass, str] = {
    "classical": "non-classical measurement certified",
    "locc": "non-LOCC measurement certified",
    "unentangled": "entangled measurement certified",
    "entangled_max": "value exceeds the qubit quantum maximum",
}


class CertificationVerdict(BaseModel):
    """Which measurement classes a witness value rules out."""

    witness: str
    value: float
    stderr: float
    significance: float = Field(description="Threshold in standard errors")
    distances: list[BoundDistance] = Field(default_factory=list)
    strongest_excluded: BoundClass | None = Field(
        default=None, description="Largest class (in inclusion order) excluded by the data"
    )

    @computed_field
    @property
    def label(self) -> str:
        """Human-readable verdict."""
        if self.strongest_excluded is None:
            return "inconclusive"
        sigma = next(d.sigma for d in self.distances if d.bound_class == self.strongest_excluded)
        shown = "inf" if math.isinf(sigma) else f"{sigma:.3g}"
        return f"{VERDICT_LABELS[self.strongest_excluded]} ({shown}σ)"

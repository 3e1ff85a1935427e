from typing import Any

from pydantic import BaseModel, Field

from entmeas.models.quantum import NoiseKind
from entmeas.models.statistics import CharacterizationRow
from entmeas.models.witness import BoundClass, CertificationVerdict


class Provenance(BaseModel):
    """Where a report's inputs came from."""

    files: dict[str, str] = Field(default_factory=dict, description="Input path to SHA-256 digest")
    seed: int | None = None
    config: dict[str, Any] = Field(default_factory=dict, description="Echo of the options used")


class CertificationReport(BaseModel):
    """Outcome of certifying a device from recorded counts."""

    witness: str
    value: float
    stderr: float
    bootstrap_stderr: float | None = Field(default=None, description="Resampling cross-check of stderr")
    verdict: CertificationVerdict
    provenance: Provenance

    @property
    def label(self) -> str:
        return self.verdict.label


class SimulationSummary(BaseModel):
    witness: str
    visibility: float
    kind: NoiseKind
    shots_per_setting: int
    seed: int
    value: float
    stderr: float
    exact_value: float = Field(description="Infinite-statistics witness value of the simulated device")
    counts_file: str
    sidecar_file: str


class SweepReport(BaseModel):
    """Exact witness values along a visibility grid and where a class bound is crossed."""

    witness: str
    kind: NoiseKind
    points: list[tuple[float, float]] = Field(description="(V, value) pairs")
    bound_class: BoundClass | None = None
    bound: float | None = None
    crossing: float | None = Field(default=None, description="Interpolated V at which the bound is exceeded")


class CharacterizationTable(BaseModel):
    rows: list[CharacterizationRow]

from typing import Any

import numpy as np
from pydantic import BaseModel, Field, model_validator

from entmeas.models.base import ArrayModel, IntTensor, RealTensor
from entmeas.models.witness import ProbabilityTable, WitnessDims


class SplittingRatios(BaseModel):
    """Measured fraction of bunched photon pairs resolved by each pseudo-number-resolving splitter."""

    ratios: dict[str, float] = Field(default_factory=dict, description="Detector pair label to ratio r in (0, 1]")
    mapping: dict[int, str] | None = Field(
        default=None, description="Default 1-based outcome to detector pair label, used when the counts carry none"
    )


class CountTable(ArrayModel):
    """Event counts per (c, x, y, z) with N shots in every (x, y, z) group.

    ``weights`` holds splitting-corrected counts (real-valued, renormalized
    to N per group); raw ``counts`` are always kept.
    """

    counts: IntTensor = Field(description="Raw counts indexed [c-1, x, y, z]")
    shots_per_setting: int = Field(ge=1, description="Events N recorded per (x, y, z)")
    weights: RealTensor | None = Field(default=None, description="Corrected counts, same shape as counts")
    ratios: SplittingRatios | None = Field(default=None, description="Correction applied to produce weights")
    mapping: dict[int, str] | None = Field(default=None, description="1-based outcome to splitter label")
    provenance: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_groups(self) -> "CountTable":
        if self.counts.ndim != 4:
            raise ValueError(f"counts need 4 axes (c, x, y, z), got {self.counts.ndim}")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        totals = self.counts.sum(axis=0)
        if np.any(totals != self.shots_per_setting):
            raise ValueError(f"every (x, y, z) group must hold {self.shots_per_setting} events")
        if self.weights is not None and self.weights.shape != self.counts.shape:
            raise ValueError("weights must match counts in shape")
        return self

    @property
    def dims(self) -> WitnessDims:
        return WitnessDims.from_shape(self.counts.shape)

    @property
    def frequencies(self) -> np.ndarray:
        """Relative frequencies per group, from corrected weights when present."""
        source = self.weights if self.weights is not None else self.counts.astype(np.float64)
        return source / source.sum(axis=0, keepdims=True)

    @classmethod
    def expected(cls, table: ProbabilityTable, shots_per_setting: int) -> "CountTable":
        """Exact-frequency counts: weights are N·p, raw counts are N·p rounded by largest remainder."""
        exact = np.clip(table.values, 0.0, None)
        exact = exact / exact.sum(axis=0, keepdims=True) * shots_per_setting
        counts = np.floor(exact).astype(np.int64)
        missing = shots_per_setting - counts.sum(axis=0)
        order = np.argsort(-(exact - counts), axis=0, kind="stable")
        ranks = np.argsort(order, axis=0, kind="stable")
        counts += (ranks < missing[None, ...]).astype(np.int64)
        return cls(
            counts=counts,
            shots_per_setting=shots_per_setting,
            weights=exact,
            provenance={"source": "expected"},
        )


class CountSidecar(BaseModel):
    """JSON metadata stored next to a counts CSV."""

    shots_per_setting: int
    dims: WitnessDims
    ratios: SplittingRatios | None = None
    mapping: dict[int, str] | None = None
    weights: list | None = None
    provenance: dict[str, Any] = Field(default_factory=dict)


class CharacterizationRow(BaseModel):
    """Projector expectations in the H/V basis for one prepared state."""

    label: str
    theory_h: float
    theory_v: float
    measured_h: float | None = None
    measured_v: float | None = None

    @property
    def deviation(self) -> float | None:
        if self.measured_h is None or self.measured_v is None:
            return None
        return max(abs(self.measured_h - self.theory_h), abs(self.measured_v - self.theory_v))

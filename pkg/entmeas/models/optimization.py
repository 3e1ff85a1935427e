from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from entmeas.models.quantum import MeasurementAssembly, PreparationFamily

SeesawMode = Literal["general", "locc", "separable"]

# Restart counts used when none is given.
DEFAULT_RESTARTS: dict[str, int] = {"general": 100, "locc": 100, "separable": 1000}


class SeesawConfig(BaseModel):
    """Parameters of one see-saw run (all restarts)."""

    model_config = ConfigDict(extra="forbid")

    mode: SeesawMode = Field(default="general", description="Class of measurements searched over")
    restarts: int = Field(
        default=DEFAULT_RESTARTS["general"],
        ge=1,
        description="Independent random starting points (default 100, or 1000 in separable mode)",
    )
    max_iters: int = Field(default=500, ge=1, description="Maximum see-saw sweeps per restart")
    conv_tol: float = Field(default=1e-9, gt=0, description="Stop when a sweep improves the objective by less")
    seed: int = Field(default=1, description="Base seed; restart i uses seed XOR i")
    separable_rank: int = Field(default=4, ge=1, description="Product terms K per effect in separable mode")
    povm_max_iters: int = Field(default=25, ge=1, description="POVM fixed-point iterations per sweep")
    polish_iters: int = Field(
        default=2000, ge=0, description="POVM fixed-point iterations at the best point before certifying (general mode)"
    )
    stall_window: int = Field(default=20, ge=2, description="Sweeps over which a stalled trajectory is detected")
    stall_tol: float = Field(
        default=1e-6, gt=0, description="A trajectory gaining less than this over stall_window sweeps has stalled"
    )
    kicks: int = Field(default=2, ge=0, description="Perturbations of a stalled restart (general and locc modes)")
    kick_strength: float = Field(
        default=0.3, gt=0, le=1, description="Weight of the random state mixed into every preparation on a kick"
    )
    penalty_start: float = Field(default=1.0, gt=0, description="Initial completeness penalty weight μ")
    penalty_factor: float = Field(default=10.0, gt=1, description="Growth of μ between outer loops")
    penalty_loops: int = Field(default=6, ge=1, description="Outer penalty loops in separable mode")
    completeness_target: float = Field(default=1e-6, gt=0, description="Target residual ‖Σ_c M_c − I‖_F")
    workers: int = Field(default=1, ge=1, description="Process workers running restarts")
    keep_history: bool = Field(default=False, description="Store per-sweep objective trajectories")

    @model_validator(mode="before")
    @classmethod
    def _mode_restarts(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("restarts") is None:
            mode = data.get("mode", "general")
            return {**data, "restarts": DEFAULT_RESTARTS.get(mode, DEFAULT_RESTARTS["general"])}
        return data


class RestartTrace(BaseModel):
    """Summary of one restart."""

    restart: int
    seed: int
    value: float = Field(description="Witness value reached by this restart")
    iterations: int
    converged: bool
    kicks: int = Field(default=0, description="Perturbations applied after the trajectory stalled")
    ascent_violations: int = Field(default=0, description="Sweeps that lowered the objective beyond roundoff")
    history: list[float] | None = Field(
        default=None, description="Objective after every sweep; a kick restarts the ascent from a lower value"
    )


class OptResult(BaseModel):
    """Best strategy found by the see-saw over all restarts."""

    witness: str
    mode: SeesawMode
    best_value: float
    best_restart: int
    best_preparations: tuple[PreparationFamily, PreparationFamily]
    best_assembly: MeasurementAssembly
    certificate_gap: float | None = Field(default=None, description="POVM dual gap at the best point (general mode)")
    completion_residual: float | None = Field(
        default=None, description="Completeness residual before the final separable completion"
    )
    converged: bool = Field(description="Whether the best restart met the convergence tolerance")
    degenerate_updates: int = Field(default=0, description="State updates with a vanishing top eigen-gap")
    trace: list[RestartTrace] = Field(default_factory=list)
    config: SeesawConfig

    @property
    def success_fraction(self) -> float:
        """Fraction of restarts within 1e-6 of the best value."""
        return sum(t.value >= self.best_value - 1e-6 for t in self.trace) / len(self.trace)

    def save(self, path: Path) -> None:
        path.write_text(self.model_dump_json(indent=2))

    @classmethod
    def load(cls, path: Path) -> "OptResult":
        return cls.model_validate_json(path.read_text())

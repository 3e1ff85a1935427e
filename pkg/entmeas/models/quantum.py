from enum import StrEnum
from typing import Literal

import numpy as np
from pydantic import Field, computed_field

from entmeas.models.base import ArrayModel, ComplexMatrix

Party = Literal["A", "B"]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


class QubitPreparation(ArrayModel):
    """A single qubit state emitted by Alice's or Bob's device.

    States built from an angle follow |ψ(θ)⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩.
    States found by the optimizer carry no angle.
    """

    angle: float | None = Field(default=None, description="Generating angle θ in radians")
    density: ComplexMatrix = Field(description="2×2 density matrix")

    @computed_field
    @property
    def bloch(self) -> list[float]:
        """Bloch vector (⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)."""
        return [float(np.trace(self.density @ pauli).real) for pauli in (PAULI_X, PAULI_Y, PAULI_Z)]


class PreparationFamily(ArrayModel):
    """Indexed preparations ρ_x (party A) or ρ_y (party B)."""

    party: Party = Field(description="Which preparation device emits these states")
    states: list[QubitPreparation] = Field(min_length=1, description="States indexed 0..n-1")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def densities(self) -> list[np.ndarray]:
        return [state.density for state in self.states]


class MeasurementAssembly(ArrayModel):
    """Charlie's POVMs: ``settings[z][c - 1]`` is the effect M_{c|z} on two qubits."""

    settings: list[list[ComplexMatrix]] = Field(min_length=1, description="Effects per measurement setting")

    @property
    def n_settings(self) -> int:
        return len(self.settings)

    @property
    def n_outcomes(self) -> int:
        return max(len(effects) for effects in self.settings)


class EffectClass(StrEnum):
    SEPARABLE = "SeparableEffect"
    ENTANGLED = "EntangledEffect"


NoiseKind = Literal["white", "dephasing"]


class VisibilityModel(ArrayModel):
    """Two-photon interference visibility V of the Bell-state analyser.

    ``white`` mixes every effect with white noise in proportion 1 − V;
    ``dephasing`` keeps populations and scales the |00⟩↔|11⟩ and |01⟩↔|10⟩
    coherences by V.
    """

    visibility: float = Field(default=1.0, description="HOM visibility V in [0, 1]")
    kind: NoiseKind = Field(default="white", description="How lost visibility degrades the effects")

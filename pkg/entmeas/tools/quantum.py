import logging
from collections.abc import Sequence

import numpy as np

from entmeas.errors import InvalidAssembly, NotPSD, VisibilityOutOfRange, WrongDimension, ZeroEffect
from entmeas.models import (
    COMPLETENESS_TOL,
    PPT_THRESHOLD,
    PSD_TOL,
    EffectClass,
    MeasurementAssembly,
    PreparationFamily,
    ProbabilityTable,
    QubitPreparation,
    VisibilityModel,
)
from entmeas.models.quantum import PAULI_X, Party
from entmeas.tools.linalg import (
    check_hermitian,
    eigvals_hermitian,
    kron,
    partial_transpose,
    projector,
    psd_inv_sqrt,
)

logger = logging.getLogger(__name__)

KET_0 = np.array([1, 0], dtype=np.complex128)
KET_1 = np.array([0, 1], dtype=np.complex128)
KET_PLUS = (KET_0 + KET_1) / np.sqrt(2)
KET_MINUS = (KET_0 - KET_1) / np.sqrt(2)

PHI_PLUS = np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=np.complex128) / np.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=np.complex128) / np.sqrt(2)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=np.complex128) / np.sqrt(2)

IDENTITY_2 = np.eye(2, dtype=np.complex128)
IDENTITY_4 = np.eye(4, dtype=np.complex128)
FLIP_B = kron(IDENTITY_2, PAULI_X)

# Entries coupling |00⟩↔|11⟩ and |01⟩↔|10⟩: the two-photon interference terms.
_INTERFERENCE_MASK = np.fliplr(np.eye(4, dtype=bool))


def pure_state(theta: float) -> QubitPreparation:
    """Preparation |ψ(θ)⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩."""
    ket = np.cos(theta / 2) * KET_0 + np.sin(theta / 2) * KET_1
    return QubitPreparation(angle=float(theta), density=projector(ket))


def trigonal_preparations(party: Party = "A") -> PreparationFamily:
    """Three states at θ_j = 2πj/3, j = 0, 1, 2."""
    return PreparationFamily(party=party, states=[pure_state(2 * np.pi * j / 3) for j in range(3)])


def relabel_sigma_x(family: PreparationFamily) -> PreparationFamily:
    """Conjugate every state of a family by σ_x (the lab relabelling of Bob's states)."""
    states = [
        QubitPreparation(angle=state.angle, density=PAULI_X @ state.density @ PAULI_X) for state in family.states
    ]
    return PreparationFamily(party=family.party, states=states)


def _check_visibility(model: VisibilityModel) -> float:
    if not 0.0 <= model.visibility <= 1.0:
        raise VisibilityOutOfRange(f"visibility must lie in [0, 1], got {model.visibility}")
    return model.visibility


def _degrade(effect: np.ndarray, model: VisibilityModel) -> np.ndarray:
    """Apply the visibility model to one effect."""
    visibility = _check_visibility(model)
    if model.kind == "white":
        return visibility * effect + (1.0 - visibility) * np.trace(effect).real / 4 * IDENTITY_4
    degraded = effect.copy()
    degraded[_INTERFERENCE_MASK] *= visibility
    return degraded


def _complete(effects: list[np.ndarray]) -> list[np.ndarray]:
    return [*effects, IDENTITY_4 - sum(effects)]


def partial_bsm_ideal() -> MeasurementAssembly:
    """Partial Bell-state measurement {|φ+⟩⟨φ+|, |φ−⟩⟨φ−|, rest}."""
    return MeasurementAssembly(settings=[_complete([projector(PHI_PLUS), projector(PHI_MINUS)])])


def partial_bsm_noisy(model: VisibilityModel) -> MeasurementAssembly:
    """Partial Bell-state measurement degraded by imperfect two-photon interference.

    ``model.kind == "white"`` mixes each Bell projector with white noise,
    M_c(V) = V·|φ±⟩⟨φ±| + (1 − V)·I/4. ``"dephasing"`` keeps the populations
    and scales the |00⟩⟨11| coherence by V, which equals
    V·|φ±⟩⟨φ±| + (1 − V)·½(|00⟩⟨00| + |11⟩⟨11|). Both reduce to the ideal
    device at V = 1.

    Raises:
        VisibilityOutOfRange: If V lies outside [0, 1]
    """
    effects = [_degrade(projector(PHI_PLUS), model), _degrade(projector(PHI_MINUS), model)]
    return MeasurementAssembly(settings=[_complete(effects)])


def partial_bsm_lab(model: VisibilityModel | None = None) -> MeasurementAssembly:
    """The analyser as built: resolves |ψ+⟩ (c=1) and |ψ−⟩ (c=2), lumps |φ±⟩ into c=3."""
    phi_frame = partial_bsm_noisy(model) if model is not None else partial_bsm_ideal()
    return MeasurementAssembly(settings=[[FLIP_B @ effect @ FLIP_B for effect in phi_frame.settings[0]]])


def unentangled_povm_pair(model: VisibilityModel | None = None) -> MeasurementAssembly:
    """Two dichotomic product measurements.

    z=0 projects onto |00⟩; z=1 onto |++⟩⟨++| + |−−⟩⟨−−| = (I⊗I + σ_x⊗σ_x)/2.
    A visibility model degrades the c=1 effects the same way as the Bell
    analyser; every effect stays separable for V in [0, 1].
    """
    first = [kron(projector(KET_0), projector(KET_0))]
    second = [
        kron(projector(KET_PLUS), projector(KET_PLUS)) + kron(projector(KET_MINUS), projector(KET_MINUS)),
    ]
    if model is not None:
        first = [_degrade(first[0], model)]
        second = [_degrade(second[0], model)]
    return MeasurementAssembly(settings=[_complete(first), _complete(second)])


def bell_analyzer() -> np.ndarray:
    """Gate (H⊗I)·CNOT whose computational-basis readout is a full Bell measurement."""
    hadamard = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
    return kron(hadamard, IDENTITY_2) @ cnot


def gate_measurement(unitary: np.ndarray, grouping: Sequence[Sequence[int]] | None = None) -> MeasurementAssembly:
    """Measurement realised by a two-qubit gate followed by computational-basis readout.

    Args:
        unitary: 4×4 unitary applied before readout
        grouping: Optional coarse-graining; each group lists basis indices 2·i + j
            merged into one outcome. Groups must partition 0..3.

    Returns:
        Single-setting assembly with effects U†|ij⟩⟨ij|U (summed within groups)
    """
    u = np.asarray(unitary, dtype=np.complex128)
    if u.shape != (4, 4):
        raise WrongDimension(f"expected a 4×4 gate, got shape {u.shape}")
    if np.max(np.abs(u.conj().T @ u - IDENTITY_4)) > 1e-10:
        raise InvalidAssembly("gate is not unitary")
    readout = [u.conj().T @ projector(IDENTITY_4[k]) @ u for k in range(4)]
    groups = [list(group) for group in grouping] if grouping is not None else [[k] for k in range(4)]
    if sorted(k for group in groups for k in group) != [0, 1, 2, 3]:
        raise InvalidAssembly(f"grouping {groups} does not partition the four readout outcomes")
    return MeasurementAssembly(settings=[[sum(readout[k] for k in group) for group in groups]])


def validate_assembly(assembly: MeasurementAssembly, tol: float = COMPLETENESS_TOL) -> None:
    """Check that every effect is PSD and every setting sums to the identity.

    Raises:
        InvalidAssembly: On the first violated condition
    """
    for z, effects in enumerate(assembly.settings):
        for c, effect in enumerate(effects, start=1):
            if effect.shape != (4, 4):
                raise InvalidAssembly(f"M_{{{c}|{z}}} has shape {effect.shape}, expected (4, 4)")
            try:
                smallest = eigvals_hermitian(check_hermitian(effect, tol=1e-10), backend="lapack")[-1]
            except ValueError as exc:
                raise InvalidAssembly(f"M_{{{c}|{z}}}: {exc}") from exc
            if smallest < -PSD_TOL:
                raise InvalidAssembly(f"M_{{{c}|{z}}} has eigenvalue {smallest:.3e} < 0")
        residual = float(np.max(np.abs(sum(effects) - IDENTITY_4)))
        if residual > tol:
            raise InvalidAssembly(f"setting z={z} sums to identity only within {residual:.3e}")


def born_table(alice: PreparationFamily, bob: PreparationFamily, assembly: MeasurementAssembly) -> ProbabilityTable:
    """p(c|x,y,z) = Tr((ρ_x ⊗ ρ_y)·M_{c|z}).

    Settings with fewer outcomes than the largest setting get zero
    probability on the missing outcomes.

    Raises:
        InvalidAssembly: If the assembly is not a valid set of POVMs
        WrongDimension: If a preparation is not a qubit state
    """
    validate_assembly(assembly)
    for state in (*alice.states, *bob.states):
        if state.density.shape != (2, 2):
            raise WrongDimension(f"preparations must be 2×2, got {state.density.shape}")

    n_c = assembly.n_outcomes
    effects = np.zeros((assembly.n_settings, n_c, 4, 4), dtype=np.complex128)
    for z, setting in enumerate(assembly.settings):
        for c, effect in enumerate(setting):
            effects[z, c] = effect

    rho_a = np.stack(alice.densities)
    rho_b = np.stack(bob.densities)
    joint = np.einsum("xik,yjl->xyijkl", rho_a, rho_b).reshape(len(alice), len(bob), 4, 4)
    values = np.einsum("xyij,zcji->cxyz", joint, effects).real
    return ProbabilityTable(values=values)


def ppt_min_eigenvalue(effect: np.ndarray) -> float:
    """Smallest eigenvalue of the partial transpose of the trace-normalized effect."""
    h = check_hermitian(np.asarray(effect, dtype=np.complex128), tol=1e-10)
    trace = float(np.trace(h).real)
    if trace <= 1e-12:
        raise ZeroEffect("effect has zero trace")
    if eigvals_hermitian(h)[-1] < -PSD_TOL:
        raise NotPSD("effect is not positive semidefinite")
    return float(eigvals_hermitian(partial_transpose(h / trace))[-1])


def classify_effect(effect: np.ndarray) -> EffectClass:
    """PPT verdict for one two-qubit effect (exact separability test on 2⊗2).

    Raises:
        ZeroEffect: If the effect vanishes
        NotPSD: If the effect is not positive semidefinite
    """
    if ppt_min_eigenvalue(effect) < PPT_THRESHOLD:
        return EffectClass.ENTANGLED
    return EffectClass.SEPARABLE


def classify_assembly(assembly: MeasurementAssembly) -> list[list[EffectClass | None]]:
    """Classify every non-zero effect; vanishing effects map to None."""
    verdicts: list[list[EffectClass | None]] = []
    for effects in assembly.settings:
        row: list[EffectClass | None] = []
        for effect in effects:
            row.append(None if np.trace(effect).real <= 1e-12 else classify_effect(effect))
        verdicts.append(row)
    return verdicts


def random_pure_state(rng: np.random.Generator) -> QubitPreparation:
    """Haar-random pure qubit state from a normalized complex Gaussian pair."""
    ket = rng.normal(size=2) + 1j * rng.normal(size=2)
    return QubitPreparation(density=projector(ket / np.linalg.norm(ket)))


def random_povm(rng: np.random.Generator, n_outcomes: int, dim: int = 4) -> list[np.ndarray]:
    """Random full-rank POVM: Wishart effects G_c normalized by (Σ G_c)^{-1/2}."""
    raw = []
    for _ in range(n_outcomes):
        x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        raw.append(x @ x.conj().T)
    normalizer = psd_inv_sqrt(sum(raw), backend="lapack")
    return [normalizer @ g @ normalizer for g in raw]

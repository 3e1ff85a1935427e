import copy
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple

import numpy as np

from entmeas.config import EigenBackend, get_settings
from entmeas.errors import DimensionMismatch, NoConvergence, SingularNormalizer
from entmeas.models import (
    MeasurementAssembly,
    OptResult,
    PreparationFamily,
    QubitPreparation,
    RestartTrace,
    SeesawConfig,
    SeesawMode,
    WitnessDims,
    WitnessSpec,
)
from entmeas.models.quantum import Party
from entmeas.tools.linalg import (
    eig_hermitian,
    eigvals_hermitian,
    hermitian_part,
    partial_transpose,
    positive_projector,
    projector,
    psd_inv_sqrt,
    psd_projection,
)
from entmeas.tools.quantum import born_table, random_povm, random_pure_state
from entmeas.tools.witnesses import evaluate

logger = logging.getLogger(__name__)

DEGENERATE_GAP = 1e-12
MONOTONE_SLACK = 1e-12
SINGULAR_FLOOR = 1e-12
# Extra shift (relative to the largest ‖F_c‖) keeping every shifted objective positive definite.
SHIFT_MARGIN = 1e-3
WARM_START_MIX = 1e-2
POVM_INNER_TOL = 1e-13
# Certificate gap above which an apparent fixed point gets a full POVM solve.
POLISH_GAP = 1e-8
MAX_POLISHES = 3

_IDENTITY_2 = np.eye(2, dtype=np.complex128)
_IDENTITY_4 = np.eye(4, dtype=np.complex128)


def _effects_tensor(assembly: MeasurementAssembly, dims: WitnessDims) -> np.ndarray:
    """Effects as an array [z, c, 4, 4], zero-padded to the witness outcome count."""
    if assembly.n_settings != dims.nz or assembly.n_outcomes > dims.nc:
        raise DimensionMismatch(
            f"assembly has {assembly.n_settings} settings and up to {assembly.n_outcomes} outcomes,"
            f" witness needs {dims.nz} settings and at most {dims.nc} outcomes"
        )
    effects = np.zeros((dims.nz, dims.nc, 4, 4), dtype=np.complex128)
    for z, setting in enumerate(assembly.settings):
        for c, effect in enumerate(setting):
            effects[z, c] = effect
    return effects


def objective_operators(spec: WitnessSpec, alice: np.ndarray, bob: np.ndarray) -> np.ndarray:
    """F_{c|z} = Σ_{x,y} W_{c|x,y,z}·ρ_x ⊗ ρ_y as an array [z, c, 4, 4].

    The witness value of an assembly is then Σ_{c,z} Tr(M_{c|z} F_{c|z}).
    """
    nz, nc = spec.dims.nz, spec.dims.nc
    joint = np.einsum("cxyz,xik,yjl->zcijkl", spec.coefficients, alice, bob)
    return joint.reshape(nz, nc, 4, 4)


def _score(effects: np.ndarray, objectives: np.ndarray) -> float:
    return float(np.einsum("...ij,...ji->...", effects, objectives).sum().real)


def _local_operators(spec: WitnessSpec, other: np.ndarray, effects: np.ndarray, party: Party) -> np.ndarray:
    """G per index of ``party``: Σ W·Tr_other((ρ_other placed on the other wire)·M)."""
    nz, nc = effects.shape[:2]
    split = effects.reshape(nz, nc, 2, 2, 2, 2)
    if party == "A":
        return np.einsum("cxyz,ylj,zcijkl->xik", spec.coefficients, other, split)
    return np.einsum("cxyz,xki,zcijkl->yjl", spec.coefficients, other, split)


def _top_state(g: np.ndarray, backend: EigenBackend) -> tuple[np.ndarray, bool]:
    values, vectors = eig_hermitian(hermitian_part(g), backend=backend)
    degenerate = bool(values[0] - values[1] < DEGENERATE_GAP)
    return projector(vectors[:, 0]), degenerate


def _update_party(
    spec: WitnessSpec, other: np.ndarray, effects: np.ndarray, party: Party, backend: EigenBackend
) -> tuple[np.ndarray, int]:
    # The objective is linear in each state separately, so all indices of one party update at once.
    locals_ = _local_operators(spec, other, effects, party)
    states = []
    degenerate = 0
    for index, g in enumerate(locals_):
        state, flat = _top_state(g, backend)
        if flat:
            degenerate += 1
            logger.debug("Degenerate objective for party %s index %d", party, index)
        states.append(state)
    return np.stack(states), degenerate


def state_update(
    spec: WitnessSpec,
    fixed_party_states: PreparationFamily,
    assembly: MeasurementAssembly,
    party: Party,
    index: int,
    *,
    backend: EigenBackend | None = None,
) -> QubitPreparation:
    """Best pure state for one preparation with everything else held fixed.

    Uses Tr((A⊗B)·M) = Tr_A(A·Tr_B((I⊗B)·M)): the witness restricted to
    ρ at (party, index) is Tr(ρ·G), maximized by the top eigenvector of G.
    A vanishing top eigen-gap is logged and resolved by the eigensolver's
    deterministic ordering (|0⟩ for G = 0).

    Args:
        spec: Witness being maximized
        fixed_party_states: The other party's preparations
        assembly: Charlie's measurements
        party: Whose state to update, "A" or "B"
        index: Preparation index x (party A) or y (party B)
        backend: Eigensolver; defaults to the configured optimizer backend

    Returns:
        Pure QubitPreparation maximizing the restricted witness
    """
    expected = spec.dims.ny if party == "A" else spec.dims.nx
    if len(fixed_party_states) != expected:
        raise DimensionMismatch(f"expected {expected} fixed preparations, got {len(fixed_party_states)}")
    effects = _effects_tensor(assembly, spec.dims)
    other = np.stack(fixed_party_states.densities)
    g = _local_operators(spec, other, effects, party)[index]
    state, degenerate = _top_state(g, backend or get_settings().seesaw_backend)
    if degenerate:
        logger.debug("Degenerate objective for party %s index %d", party, index)
    return QubitPreparation(density=state)


def _round_projective(effects: np.ndarray, backend: EigenBackend) -> np.ndarray | None:
    """Snap a nearly projective POVM to an exactly complete projective one, if it is one."""
    projectors = []
    for effect in effects:
        values, vectors = eig_hermitian(effect, backend=backend)
        kept = vectors[:, values > 0.5]
        projectors.append(kept @ kept.conj().T)
    total = sum(projectors)
    if np.max(np.abs(total - np.eye(effects.shape[-1]))) > 1e-6:
        return None
    normalizer = psd_inv_sqrt(total, backend=backend)
    return np.stack([hermitian_part(normalizer @ p @ normalizer) for p in projectors])


def _povm_ascent(
    objectives: np.ndarray,
    initial: np.ndarray | None,
    max_iters: int,
    tol: float,
    backend: EigenBackend,
) -> tuple[np.ndarray, float, int]:
    n, dim = objectives.shape[0], objectives.shape[-1]
    identity = np.eye(dim, dtype=np.complex128)
    lowest = min(float(eigvals_hermitian(f, backend=backend)[-1]) for f in objectives)
    scale = max(1.0, max(float(np.linalg.norm(f, 2)) for f in objectives))
    shift = max(0.0, -lowest) + SHIFT_MARGIN * scale
    shifted = objectives + shift * identity

    if initial is None:
        current = np.stack([identity / n] * n)
        best, best_value = current, _score(current, objectives)
    else:
        best, best_value = initial, _score(initial, objectives)
        current = (1 - WARM_START_MIX) * initial + WARM_START_MIX * identity / n

    previous = _score(current, objectives)
    iterations = 0
    for iterations in range(1, max_iters + 1):
        weighted = np.einsum("cij,cjk,ckl->cil", shifted, current, shifted)
        normalizer = psd_inv_sqrt(weighted.sum(axis=0), floor=SINGULAR_FLOOR, backend=backend)
        current = np.stack([hermitian_part(normalizer @ w @ normalizer) for w in weighted])
        if np.max(np.abs(current.sum(axis=0) - identity)) > 1e-8:
            raise SingularNormalizer("normalizer R is rank-deficient beyond the regularization floor")
        value = _score(current, objectives)
        if value > best_value:
            best, best_value = current, value
        if abs(value - previous) < tol:
            break
        previous = value

    rounded = _round_projective(best, backend)
    if rounded is not None:
        rounded_value = _score(rounded, objectives)
        if rounded_value >= best_value:
            best, best_value = rounded, rounded_value
    logger.debug("POVM ascent stopped after %d iterations at %.12f", iterations, best_value)
    return best, best_value, iterations


def povm_update(
    effect_objectives: list[np.ndarray],
    initial: list[np.ndarray] | None = None,
    *,
    max_iters: int = 2000,
    tol: float = POVM_INNER_TOL,
    backend: EigenBackend | None = None,
) -> list[np.ndarray]:
    """Maximize Σ_c Tr(M_c F_c) over POVMs {M_c}.

    Shifts F̃_c = F_c + λI with λ large enough that every F̃_c is positive
    definite (a constant offset of the objective), then iterates
    M_c ← R^{-1/2} F̃_c M_c F̃_c R^{-1/2} with R = Σ_c F̃_c M_c F̃_c. The best
    iterate is kept so the returned POVM never scores below ``initial``; a
    nearly projective result is snapped to an exact projective measurement.

    Args:
        effect_objectives: Hermitian F_c, one per outcome (zero for unweighted outcomes)
        initial: Starting POVM; defaults to the uniform I/n
        max_iters: Iteration cap
        tol: Stop when an iteration changes the objective by less
        backend: Eigensolver; defaults to the configured optimizer backend

    Returns:
        POVM effects in outcome order

    Raises:
        SingularNormalizer: If R loses rank beyond the 1e-12 regularization
    """
    objectives = np.stack([hermitian_part(np.asarray(f, dtype=np.complex128)) for f in effect_objectives])
    start = None if initial is None else np.stack([np.asarray(m, dtype=np.complex128) for m in initial])
    effects, _, _ = _povm_ascent(objectives, start, max_iters, tol, backend or get_settings().seesaw_backend)
    return list(effects)


def certify_povm_optimality(
    effect_objectives: list[np.ndarray],
    effects: list[np.ndarray],
    eps: float | None = None,
    *,
    backend: EigenBackend | None = None,
) -> float:
    """Dual gap of a POVM for max Σ_c Tr(M_c F_c).

    Y = Σ_c (F_c M_c + M_c F_c)/2 has Tr(Y) equal to the primal value; the gap
    max(0, max_c λ_max(F_c − Y)) vanishes exactly when Y is dual feasible, so
    gap ≤ eps certifies the POVM eps-optimal for its subproblem.

    Returns:
        Non-negative certificate gap
    """
    chosen = backend or get_settings().seesaw_backend
    objectives = [hermitian_part(np.asarray(f, dtype=np.complex128)) for f in effect_objectives]
    dual = hermitian_part(sum((f @ m + m @ f) / 2 for f, m in zip(objectives, effects, strict=True)))
    gap = max(0.0, max(float(eigvals_hermitian(f - dual, backend=chosen)[0]) for f in objectives))
    if eps is not None:
        logger.debug("POVM certificate gap %.3e (%s eps=%.1e)", gap, "within" if gap <= eps else "above", eps)
    return gap


class _GeneralBlock:
    """Unrestricted POVMs, one per setting."""

    def __init__(self, effects: np.ndarray, config: SeesawConfig, backend: EigenBackend):
        self.current = effects
        self.config = config
        self.backend = backend

    def effects(self) -> np.ndarray:
        return self.current

    def improve(self, objectives: np.ndarray) -> None:
        self.polish(objectives, self.config.povm_max_iters)

    def polish(self, objectives: np.ndarray, iterations: int) -> None:
        for z in range(self.current.shape[0]):
            try:
                self.current[z], _, _ = _povm_ascent(
                    objectives[z], self.current[z], iterations, POVM_INNER_TOL, self.backend
                )
            except SingularNormalizer:
                logger.debug("Singular normalizer in setting %d; keeping the previous POVM", z)

    def certificate(self, objectives: np.ndarray) -> float:
        return max(
            certify_povm_optimality(list(objectives[z]), list(self.current[z]), backend=self.backend)
            for z in range(self.current.shape[0])
        )

    def score(self, objectives: np.ndarray) -> float:
        return _score(self.current, objectives)

    def reopen(self, strength: float) -> None:
        # The fixed point never leaves the support of its start, so a kick mixes the POVM back toward I/n.
        n = self.current.shape[1]
        self.current = (1 - strength) * self.current + strength * _IDENTITY_4 / n

    def assembly(self) -> MeasurementAssembly:
        return MeasurementAssembly(settings=[list(setting) for setting in self.current])


class _LoccBlock:
    """One-way LOCC: qubit A measured first, then qubit B conditioned on the result.

    Per setting: A_a (a = 0, 1), B_{b|a} (b = 0, 1) and a postprocessing
    table g(a, b) → c, giving M_c = Σ_{g(a,b)=c} A_a ⊗ B_{b|a}.
    """

    def __init__(
        self, first: np.ndarray, second: np.ndarray, relabel: np.ndarray, n_outcomes: int, backend: EigenBackend
    ):
        self.first = first  # [z, a, 2, 2]
        self.second = second  # [z, a, b, 2, 2]
        self.relabel = relabel  # [z, a, b] → 0-based c
        self.n_outcomes = n_outcomes
        self.backend = backend

    def effects(self) -> np.ndarray:
        nz = self.first.shape[0]
        effects = np.zeros((nz, self.n_outcomes, 4, 4), dtype=np.complex128)
        for z in range(nz):
            for a in range(2):
                for b in range(2):
                    effects[z, self.relabel[z, a, b]] += np.kron(self.first[z, a], self.second[z, a, b])
        return effects

    def improve(self, objectives: np.ndarray) -> None:
        # Each block below is solved exactly, so the objective cannot decrease.
        for z, settings in enumerate(objectives):
            split = settings.reshape(self.n_outcomes, 2, 2, 2, 2)
            products = np.einsum("aik,abjl->abijkl", self.first[z], self.second[z]).reshape(2, 2, 4, 4)
            gains = np.einsum("abij,cji->abc", products, settings).real
            self.relabel[z] = gains.argmax(axis=-1)

            for a in range(2):
                reduced = [
                    np.einsum("ki,ijkl->jl", self.first[z, a], split[self.relabel[z, a, b]]) for b in range(2)
                ]
                keep = positive_projector(hermitian_part(reduced[0] - reduced[1]), backend=self.backend)
                self.second[z, a] = [keep, _IDENTITY_2 - keep]

            reduced_a = [
                sum(np.einsum("lj,ijkl->ik", self.second[z, a, b], split[self.relabel[z, a, b]]) for b in range(2))
                for a in range(2)
            ]
            keep = positive_projector(hermitian_part(reduced_a[0] - reduced_a[1]), backend=self.backend)
            self.first[z] = [keep, _IDENTITY_2 - keep]

    def score(self, objectives: np.ndarray) -> float:
        return _score(self.effects(), objectives)

    def reopen(self, strength: float) -> None:
        """Kicks only move the states; the projective structure is kept."""

    def assembly(self) -> MeasurementAssembly:
        return MeasurementAssembly(settings=[list(setting) for setting in self.effects()])


def complete_separable(effects: np.ndarray, backend: EigenBackend) -> tuple[np.ndarray, float]:
    """Turn nearly complete separable effects into an exact POVM that stays separable.

    Rescales so Σ_c M_c ≤ I, hands the deficit D = I − Σ_c M_c out evenly,
    then mixes every effect with I/n_c just enough that each partial
    transpose is positive semidefinite (exact separability on 2⊗2).

    Returns:
        Tuple of (completed effects [z, c, 4, 4], largest ‖Σ_c M_c − I‖_F before completion)
    """
    nz, nc = effects.shape[:2]
    completed = np.empty_like(effects)
    residual = 0.0
    for z in range(nz):
        total = effects[z].sum(axis=0)
        residual = max(residual, float(np.linalg.norm(total - _IDENTITY_4)))
        top = float(eigvals_hermitian(total, backend=backend)[0])
        if top <= 0:
            completed[z] = np.stack([_IDENTITY_4 / nc] * nc)
            continue
        scaled = effects[z] / top
        deficit = _IDENTITY_4 - scaled.sum(axis=0)
        filled = scaled + deficit / nc
        lowest = [float(eigvals_hermitian(partial_transpose(e), backend=backend)[-1]) for e in filled]
        mix = max([0.0] + [-lam / (1.0 / nc - lam) for lam in lowest if lam < 0])
        completed[z] = np.stack([hermitian_part((1 - mix) * e + mix * _IDENTITY_4 / nc) for e in filled])
    return completed, residual


class _SeparableBlock:
    """Effects M_c = Σ_k A_{c,k} ⊗ B_{c,k} with PSD factors and a completeness penalty μ‖Σ_c M_c − I‖²_F."""

    def __init__(self, left: np.ndarray, right: np.ndarray, backend: EigenBackend):
        self.left = left  # [z, c, k, 2, 2]
        self.right = right
        self.penalty = 0.0
        self.backend = backend

    def effects(self) -> np.ndarray:
        nz, nc = self.left.shape[:2]
        return np.einsum("zcnik,zcnjl->zcijkl", self.left, self.right).reshape(nz, nc, 4, 4)

    def _factor_update(self, gain: np.ndarray, overlap: np.ndarray, partner_norm: float) -> np.ndarray:
        # argmax over PSD X of Tr(X(G − 2μh)) − μ‖partner‖²‖X‖²
        if partner_norm <= 0:
            return np.zeros((2, 2), dtype=np.complex128)
        target = hermitian_part(gain - 2 * self.penalty * overlap) / (2 * self.penalty * partner_norm)
        return psd_projection(target, backend=self.backend)

    def improve(self, objectives: np.ndarray) -> None:
        nz, nc, rank = self.left.shape[:3]
        for z in range(nz):
            split = objectives[z].reshape(nc, 2, 2, 2, 2)
            total = self.effects()[z].sum(axis=0)
            for c in range(nc):
                for k in range(rank):
                    term = np.kron(self.left[z, c, k], self.right[z, c, k])
                    rest = (total - term - _IDENTITY_4).reshape(2, 2, 2, 2)
                    b = self.right[z, c, k]
                    self.left[z, c, k] = self._factor_update(
                        np.einsum("lj,ijkl->ik", b, split[c]),
                        np.einsum("lj,ijkl->ik", b, rest),
                        float(np.sum(np.abs(b) ** 2)),
                    )
                    a = self.left[z, c, k]
                    self.right[z, c, k] = self._factor_update(
                        np.einsum("ki,ijkl->jl", a, split[c]),
                        np.einsum("ki,ijkl->jl", a, rest),
                        float(np.sum(np.abs(a) ** 2)),
                    )
                    total = rest.reshape(4, 4) + _IDENTITY_4 + np.kron(self.left[z, c, k], self.right[z, c, k])

    def residual(self) -> float:
        return float(max(np.linalg.norm(e.sum(axis=0) - _IDENTITY_4) for e in self.effects()))

    def score(self, objectives: np.ndarray) -> float:
        penalty = sum(np.linalg.norm(e.sum(axis=0) - _IDENTITY_4) ** 2 for e in self.effects())
        return _score(self.effects(), objectives) - self.penalty * float(penalty)

    def completed(self) -> tuple[np.ndarray, float]:
        return complete_separable(self.effects(), self.backend)

    def assembly(self) -> MeasurementAssembly:
        effects, _ = self.completed()
        return MeasurementAssembly(settings=[list(setting) for setting in effects])


def _random_psd(rng: np.random.Generator, dim: int) -> np.ndarray:
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return x @ x.conj().T


def _random_block(
    rng: np.random.Generator, mode: SeesawMode, dims: WitnessDims, config: SeesawConfig, backend: EigenBackend
) -> _GeneralBlock | _LoccBlock | _SeparableBlock:
    if mode == "general":
        effects = np.stack([np.stack(random_povm(rng, dims.nc, dim=4)) for _ in range(dims.nz)])
        return _GeneralBlock(effects, config, backend)
    if mode == "locc":
        first = np.stack([np.stack(random_povm(rng, 2, dim=2)) for _ in range(dims.nz)])
        second = np.stack(
            [np.stack([np.stack(random_povm(rng, 2, dim=2)) for _ in range(2)]) for _ in range(dims.nz)]
        )
        relabel = rng.integers(dims.nc, size=(dims.nz, 2, 2))
        return _LoccBlock(first, second, relabel, dims.nc, backend)

    rank = config.separable_rank
    shape = (dims.nz, dims.nc, rank)
    left = np.stack([_random_psd(rng, 2) for _ in range(int(np.prod(shape)))]).reshape(*shape, 2, 2)
    right = np.stack([_random_psd(rng, 2) for _ in range(int(np.prod(shape)))]).reshape(*shape, 2, 2)
    block = _SeparableBlock(left, right, backend)
    for z, effects in enumerate(block.effects()):
        block.left[z] /= float(eigvals_hermitian(effects.sum(axis=0), backend=backend)[0])
    return block


def _families(alice: np.ndarray, bob: np.ndarray) -> tuple[PreparationFamily, PreparationFamily]:
    return (
        PreparationFamily(party="A", states=[QubitPreparation(density=rho) for rho in alice]),
        PreparationFamily(party="B", states=[QubitPreparation(density=rho) for rho in bob]),
    )


def _random_states(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.stack([random_pure_state(rng).density for _ in range(n)])


def start_point(
    rng: np.random.Generator,
    mode: SeesawMode,
    dims: WitnessDims,
    *,
    separable_rank: int = 4,
) -> tuple[tuple[PreparationFamily, PreparationFamily], MeasurementAssembly]:
    """Random restart point: Haar-random pure states and a random measurement of the mode's class.

    Separable starts are completed to an exact POVM so the returned assembly
    is always valid.
    """
    backend = get_settings().seesaw_backend
    config = SeesawConfig(mode=mode, separable_rank=separable_rank)
    alice = _random_states(rng, dims.nx)
    bob = _random_states(rng, dims.ny)
    block = _random_block(rng, mode, dims, config, backend)
    return _families(alice, bob), block.assembly()


def check_ascent(previous: float, current: float, restart: int) -> bool:
    """Warn when a sweep lowered the objective beyond roundoff.

    Returns:
        True if the sweep was a descent
    """
    if current < previous - MONOTONE_SLACK * max(1.0, abs(previous)):
        logger.warning("Objective decreased from %.12f to %.12f (restart %d)", previous, current, restart)
        return True
    return False


def _stalled(values: list[float], window: int, tol: float) -> bool:
    return len(values) > window and values[-1] - values[-1 - window] < tol


def _kick_states(rng: np.random.Generator, states: np.ndarray, strength: float, backend: EigenBackend) -> np.ndarray:
    """Mix every pure state with a random one and return the nearest pure states."""
    kicked = []
    for rho in states:
        mixed = (1 - strength) * rho + strength * random_pure_state(rng).density
        kicked.append(_top_state(mixed, backend)[0])
    return np.stack(kicked)


class _RestartOutcome(NamedTuple):
    trace: RestartTrace
    preparations: tuple[PreparationFamily, PreparationFamily]
    assembly: MeasurementAssembly
    degenerate: int
    certificate_gap: float | None
    completion_residual: float | None


def _run_restart(spec: WitnessSpec, config: SeesawConfig, restart: int, backend: EigenBackend) -> _RestartOutcome:
    seed = config.seed ^ restart
    rng = np.random.default_rng(seed)
    alice = _random_states(rng, spec.dims.nx)
    bob = _random_states(rng, spec.dims.ny)
    block = _random_block(rng, config.mode, spec.dims, config, backend)

    separable = isinstance(block, _SeparableBlock)
    if separable:
        penalties = [config.penalty_start * config.penalty_factor**level for level in range(config.penalty_loops)]
    else:
        penalties = [0.0]

    history: list[float] = []
    degenerate = 0
    violations = 0
    iterations = 0
    kicks = 0
    converged = False
    best: tuple[float, np.ndarray, np.ndarray, _GeneralBlock | _LoccBlock | _SeparableBlock] | None = None
    for penalty in penalties:
        if separable:
            block.penalty = penalty
        previous = block.score(objective_operators(spec, alice, bob))
        recent = [previous]
        polishes = 0
        # Separable mode gets the sweep budget per penalty level, the others per restart.
        budget = iterations + config.max_iters
        while iterations < budget:
            iterations += 1
            alice, flat_a = _update_party(spec, bob, block.effects(), "A", backend)
            bob, flat_b = _update_party(spec, alice, block.effects(), "B", backend)
            degenerate += flat_a + flat_b
            objectives = objective_operators(spec, alice, bob)
            block.improve(objectives)
            current = block.score(objectives)
            if (
                abs(current - previous) < config.conv_tol
                and isinstance(block, _GeneralBlock)
                and polishes < MAX_POLISHES
                and block.certificate(objectives) > POLISH_GAP
            ):
                # A capped inner ascent can stop short; solve the POVM step fully before accepting a fixed point.
                polishes += 1
                block.polish(objectives, config.polish_iters)
                current = block.score(objectives)
            violations += check_ascent(previous, current, restart)
            if config.keep_history:
                history.append(current)
            logger.debug("Restart %d sweep %d: %.12f", restart, iterations, current)
            recent.append(current)

            converged = abs(current - previous) < config.conv_tol
            stalled = not converged and _stalled(recent, config.stall_window, config.stall_tol)
            previous = current
            if not (converged or stalled):
                continue
            if separable:
                break
            if best is None or current > best[0]:
                best = (current, alice.copy(), bob.copy(), copy.deepcopy(block))
            if not stalled or kicks >= config.kicks:
                break
            # Stalled short of a stationary point: perturb and keep climbing from there.
            kicks += 1
            logger.debug("Restart %d stalled at %.12f after %d sweeps; kick %d", restart, current, iterations, kicks)
            alice = _kick_states(rng, alice, config.kick_strength, backend)
            bob = _kick_states(rng, bob, config.kick_strength, backend)
            block.reopen(config.kick_strength)
            previous = block.score(objective_operators(spec, alice, bob))
            recent = [previous]
            polishes = 0

    if not separable:
        final = block.score(objective_operators(spec, alice, bob))
        if best is not None and best[0] > final:
            _, alice, bob, block = best
            converged = False

    completion_residual = None
    if isinstance(block, _SeparableBlock):
        completion_residual = block.residual()
        if completion_residual > config.completeness_target:
            logger.warning(
                "Restart %d: completeness residual %.2e above target %.1e before completion",
                restart,
                completion_residual,
                config.completeness_target,
            )

    certificate_gap = None
    if isinstance(block, _GeneralBlock):
        objectives = objective_operators(spec, alice, bob)
        if config.polish_iters:
            block.polish(objectives, config.polish_iters)
        certificate_gap = block.certificate(objectives)

    preparations = _families(alice, bob)
    assembly = block.assembly()
    value = evaluate(spec, born_table(*preparations, assembly)).value

    logger.info("Restart %d (seed %d): %.9f after %d sweeps, %d kicks", restart, seed, value, iterations, kicks)
    trace = RestartTrace(
        restart=restart,
        seed=seed,
        value=value,
        iterations=iterations,
        converged=converged,
        kicks=kicks,
        ascent_violations=violations,
        history=history if config.keep_history else None,
    )
    return _RestartOutcome(trace, preparations, assembly, degenerate, certificate_gap, completion_residual)


def seesaw(spec: WitnessSpec, config: SeesawConfig) -> OptResult:
    """Maximize a witness over preparations and measurements of one class by alternating optimization.

    Each sweep replaces every preparation by its conditional optimum, then
    improves Charlie's measurement within the class chosen by ``config.mode``:

    - ``general``: arbitrary POVMs, with a dual certificate at the end
    - ``locc``: one-way LOCC with an optimized postprocessing table
    - ``separable``: sums of K product effects under a growing completeness
      penalty, completed to an exact separable POVM at the end

    In general mode each sweep runs at most ``povm_max_iters`` fixed-point
    iterations; an apparent fixed point whose POVM certificate is still open
    gets a full solve before it is accepted. A trajectory gaining less than
    ``stall_tol`` over ``stall_window`` sweeps has stalled: in general and
    locc modes its states are perturbed up to ``kicks`` times, and the best
    point seen is kept.

    Restart ``i`` is seeded with ``config.seed ^ i``; the best restart wins,
    ties going to the lowest restart index.

    Args:
        spec: Witness to maximize
        config: Mode, restart count and convergence settings

    Returns:
        OptResult holding the best strategy and the per-restart trace. If the
        best restart did not converge, ``converged`` is False.

    Examples:
        >>> seesaw(witness_w(), SeesawConfig(mode="general", restarts=5)).best_value
        1.5
    """
    backend = get_settings().seesaw_backend
    restarts = list(range(config.restarts))
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(
                pool.map(
                    _run_restart,
                    [spec] * len(restarts),
                    [config] * len(restarts),
                    restarts,
                    [backend] * len(restarts),
                )
            )
    else:
        outcomes = [_run_restart(spec, config, restart, backend) for restart in restarts]

    best = max(outcomes, key=lambda o: (o.trace.value, -o.trace.restart))
    if not best.trace.converged:
        logger.warning(
            "Best restart %d did not converge within %d sweeps (value %.9f)",
            best.trace.restart,
            config.max_iters,
            best.trace.value,
        )

    return OptResult(
        witness=spec.name,
        mode=config.mode,
        best_value=best.trace.value,
        best_restart=best.trace.restart,
        best_preparations=best.preparations,
        best_assembly=best.assembly,
        certificate_gap=best.certificate_gap,
        completion_residual=best.completion_residual,
        converged=best.trace.converged,
        degenerate_updates=sum(o.degenerate for o in outcomes),
        trace=[o.trace for o in outcomes],
        config=config,
    )


def require_convergence(result: OptResult) -> OptResult:
    """Return the result unchanged, or raise NoConvergence if its best restart stopped at the sweep limit."""
    if not result.converged:
        raise NoConvergence(
            f"best restart of '{result.witness}' did not converge within {result.config.max_iters} sweeps"
        )
    return result

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from entmeas.config import get_settings
from entmeas.errors import BudgetExceeded, DimensionMismatch
from entmeas.models import BoundResult, ClassicalStrategy, ProbabilityTable, WitnessDims, WitnessSpec
from entmeas.tools.witnesses import evaluate

logger = logging.getLogger(__name__)


def strategy_to_table(strategy: ClassicalStrategy, dims: WitnessDims) -> ProbabilityTable:
    """Deterministic table with p(c|x,y,z) = 1 iff c = charlie_out[alice_msg[x]][bob_msg[y]][z].

    Raises:
        DimensionMismatch: If the strategy's tables do not cover ``dims``
    """
    if len(strategy.alice_msg) != dims.nx or len(strategy.bob_msg) != dims.ny or strategy.n_settings != dims.nz:
        raise DimensionMismatch(
            f"strategy covers (nx={len(strategy.alice_msg)}, ny={len(strategy.bob_msg)}, nz={strategy.n_settings}),"
            f" witness needs (nx={dims.nx}, ny={dims.ny}, nz={dims.nz})"
        )
    highest = max(c for row in strategy.charlie_out for cell in row for c in cell)
    if highest > dims.nc:
        raise DimensionMismatch(f"strategy outputs c={highest} but the witness has {dims.nc} outcomes")

    values = np.zeros(dims.shape)
    for x, b_a in enumerate(strategy.alice_msg):
        for y, b_b in enumerate(strategy.bob_msg):
            for z in range(dims.nz):
                values[strategy.charlie_out[b_a][b_b][z] - 1, x, y, z] = 1.0
    return ProbabilityTable(values=values)


def count_strategies(dims: WitnessDims, message_levels: int = 2) -> int:
    """m^{n_x}·m^{n_y}·n_c^{m²·n_z} deterministic strategies with m-level messages."""
    m = message_levels
    return m**dims.nx * m**dims.ny * dims.nc ** (m * m * dims.nz)


def _message_tables(n: int, levels: int) -> np.ndarray:
    """All maps {0..n-1} → {0..levels-1} in lexicographic order, one per row."""
    return np.array(list(itertools.product(range(levels), repeat=n)), dtype=np.int64).reshape(-1, n)


def _one_hot(tables: np.ndarray, levels: int) -> np.ndarray:
    # [table, level, index] = 1 where table[index] == level
    return (tables[:, None, :] == np.arange(levels)[None, :, None]).astype(np.float64)


def _search_partition(
    coefficients: np.ndarray, levels: int, alice_indices: list[int]
) -> tuple[float, int, int, np.ndarray] | None:
    """Best strategy among the given Alice tables.

    For fixed message tables the witness splits into independent cells
    (b_A, b_B, z); Charlie's best reply takes the first maximizing outcome in
    each, which is also the lexicographically first optimal output table.
    """
    _, nx, ny, _ = coefficients.shape
    alice_tables = _message_tables(nx, levels)
    bob_onehot = _one_hot(_message_tables(ny, levels), levels)

    best: tuple[float, int, int, np.ndarray] | None = None
    for a_index in alice_indices:
        alice_onehot = _one_hot(alice_tables[a_index : a_index + 1], levels)[0]
        per_alice = np.einsum("ax,cxyz->acyz", alice_onehot, coefficients)
        # gains[b_table, b_A, b_B, z, c]
        gains = np.einsum("tby,acyz->tabzc", bob_onehot, per_alice)
        scores = gains.max(axis=-1).sum(axis=(1, 2, 3))
        b_index = int(np.argmax(scores))
        if best is None or scores[b_index] > best[0]:
            best = (float(scores[b_index]), a_index, b_index, gains[b_index].argmax(axis=-1) + 1)
    return best


def classical_bound(
    spec: WitnessSpec,
    *,
    message_levels: int = 2,
    budget: int | None = None,
    workers: int | None = None,
) -> BoundResult:
    """Exact maximum of a witness over deterministic classical strategies.

    Shared randomness cannot exceed this value since the witness is linear.

    Args:
        spec: Witness to bound
        message_levels: Alphabet size of each party's message (2 = one bit)
        budget: Maximum number of strategies; defaults to the configured budget
        workers: Processes to split Alice's message tables across

    Returns:
        BoundResult whose argmax is the first maximizer in lexicographic
        order over (alice_msg, bob_msg, charlie_out)

    Raises:
        BudgetExceeded: If the strategy count exceeds the budget

    Examples:
        >>> classical_bound(witness_w()).max_value
        1.0
        >>> classical_bound(witness_v()).n_enumerated
        16384
    """
    if message_levels < 1:
        raise ValueError(f"message_levels must be at least 1, got {message_levels}")
    settings = get_settings()
    limit = budget if budget is not None else settings.enumeration_budget
    n_strategies = count_strategies(spec.dims, message_levels)
    if n_strategies > limit:
        raise BudgetExceeded(n_strategies, limit)

    n_alice = message_levels**spec.dims.nx
    n_workers = min(workers or settings.workers, n_alice)
    logger.info(
        "Enumerating %d strategies for witness '%s' (%d-level messages, %d workers)",
        n_strategies,
        spec.name,
        message_levels,
        n_workers,
    )

    if n_workers <= 1:
        results = [_search_partition(spec.coefficients, message_levels, list(range(n_alice)))]
    else:
        chunks = [list(range(n_alice))[k::n_workers] for k in range(n_workers)]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(
                pool.map(_search_partition, [spec.coefficients] * n_workers, [message_levels] * n_workers, chunks)
            )

    candidates = [r for r in results if r is not None]
    # equal maxima resolve to the lowest Alice table, then the lowest Bob table
    _, a_index, b_index, outputs = max(candidates, key=lambda r: (r[0], -r[1], -r[2]))

    strategy = ClassicalStrategy(
        alice_msg=_message_tables(spec.dims.nx, message_levels)[a_index].tolist(),
        bob_msg=_message_tables(spec.dims.ny, message_levels)[b_index].tolist(),
        charlie_out=outputs.tolist(),
    )
    max_value = evaluate(spec, strategy_to_table(strategy, spec.dims)).value
    logger.info("Classical bound of '%s' is %g", spec.name, max_value)
    return BoundResult(
        witness=spec.name,
        max_value=max_value,
        argmax=strategy,
        n_enumerated=n_strategies,
        message_levels=message_levels,
    )


def random_strategy(rng: np.random.Generator, dims: WitnessDims, message_levels: int = 2) -> ClassicalStrategy:
    """Uniformly random deterministic strategy."""
    return ClassicalStrategy(
        alice_msg=rng.integers(message_levels, size=dims.nx).tolist(),
        bob_msg=rng.integers(message_levels, size=dims.ny).tolist(),
        charlie_out=(rng.integers(dims.nc, size=(message_levels, message_levels, dims.nz)) + 1).tolist(),
    )

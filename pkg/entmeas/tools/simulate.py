import logging
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from entmeas.errors import CountsParseError, DimensionMismatch, RatioOutOfRange, UnnormalizedTable
from entmeas.models import (
    NORMALIZATION_TOL,
    CharacterizationRow,
    CountSidecar,
    CountTable,
    MeasurementAssembly,
    PreparationFamily,
    ProbabilityTable,
    SplittingRatios,
    VisibilityModel,
    WitnessSpec,
)
from entmeas.models.quantum import NoiseKind
from entmeas.tools.quantum import (
    born_table,
    partial_bsm_noisy,
    relabel_sigma_x,
    trigonal_preparations,
    unentangled_povm_pair,
)
from entmeas.tools.witnesses import check_dims, evaluate

logger = logging.getLogger(__name__)

COUNT_COLUMNS = ["z", "x", "y", "c", "count"]

# Laboratory characterization of the six prepared states: (⟨Π_H⟩, ⟨Π_V⟩).
MEASURED_PREPARATIONS: dict[str, tuple[float, float]] = {
    "A0": (0.993, 0.007),
    "A1": (0.256, 0.744),
    "A2": (0.251, 0.749),
    "B0": (0.009, 0.991),
    "B1": (0.750, 0.250),
    "B2": (0.743, 0.257),
}


def sample_counts(table: ProbabilityTable, shots: int, seed: int) -> CountTable:
    """Draw N independent events per (x, y, z) from p(c|x,y,z).

    Args:
        table: Normalized probability table
        shots: Events N per (x, y, z) group
        seed: Generator seed; equal seeds give equal counts

    Returns:
        CountTable with raw multinomial counts

    Raises:
        UnnormalizedTable: If some group does not sum to 1
    """
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    if not table.is_normalized(NORMALIZATION_TOL):
        raise UnnormalizedTable("cannot sample from an unnormalized table")

    rng = np.random.default_rng(seed)
    probabilities = np.clip(table.values, 0.0, None)
    probabilities = probabilities / probabilities.sum(axis=0, keepdims=True)
    nc = probabilities.shape[0]
    # one multinomial per (x, y, z) group, outcomes on the last axis
    groups = np.moveaxis(probabilities, 0, -1).reshape(-1, nc)
    draws = rng.multinomial(shots, groups)
    counts = np.moveaxis(draws.reshape(*probabilities.shape[1:], nc), -1, 0)
    logger.info("Sampled %d events in each of %d groups (seed %d)", shots, groups.shape[0], seed)
    return CountTable(counts=counts, shots_per_setting=shots, provenance={"seed": seed})


def _group_moments(spec: WitnessSpec, frequencies: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    first = np.sum(spec.coefficients * frequencies, axis=0)
    second = np.sum(spec.coefficients**2 * frequencies, axis=0)
    return first, second


def estimate(spec: WitnessSpec, counts: CountTable) -> tuple[float, float]:
    """Witness estimate from observed frequencies with a first-order standard error.

    Within a group the frequencies are multinomial (var p(1−p)/N, covariance
    −p p'/N), so each group contributes (Σ_c W²p − (Σ_c W p)²)/N; groups are
    independent.

    Returns:
        Tuple of (value, stderr)

    Raises:
        DimensionMismatch: If the counts do not match the witness dims
    """
    check_dims(spec, counts.counts.shape)
    first, second = _group_moments(spec, counts.frequencies)
    value = float(first.sum())
    variance = float(np.sum(second - first**2)) / counts.shots_per_setting
    return value, float(np.sqrt(max(variance, 0.0)))


def bootstrap_stderr(spec: WitnessSpec, counts: CountTable, resamples: int = 1000, seed: int = 1) -> float:
    """Standard deviation of the witness over multinomial resamples of the observed frequencies."""
    check_dims(spec, counts.counts.shape)
    if resamples < 2:
        raise ValueError(f"bootstrap needs at least 2 resamples, got {resamples}")
    rng = np.random.default_rng(seed)
    frequencies = counts.frequencies
    nc = frequencies.shape[0]
    groups = np.moveaxis(frequencies, 0, -1).reshape(-1, nc)
    weights = np.moveaxis(spec.coefficients, 0, -1).reshape(-1, nc)
    draws = rng.multinomial(counts.shots_per_setting, groups, size=(resamples, groups.shape[0]))
    values = np.einsum("rgc,gc->r", draws / counts.shots_per_setting, weights)
    return float(np.std(values, ddof=1))


def apply_splitting_correction(
    counts: CountTable, ratios: SplittingRatios, mapping: dict[int, str]
) -> CountTable:
    """Undo the partial resolution of bunched photon pairs.

    Counts on every mapped outcome are divided by the splitter's measured
    ratio r, then each (x, y, z) group is renormalized to N. Raw integer
    counts are kept; the corrected values live in ``weights``.

    Args:
        counts: Recorded counts
        ratios: Measured ratio r in (0, 1] per splitter label
        mapping: 1-based outcome c to the splitter label that resolves it

    Raises:
        RatioOutOfRange: If a ratio lies outside (0, 1] or a mapped label has no ratio
    """
    corrected = counts.weights.copy() if counts.weights is not None else counts.counts.astype(np.float64)
    for outcome, label in sorted(mapping.items()):
        if label not in ratios.ratios:
            raise RatioOutOfRange(f"no splitting ratio given for '{label}'")
        ratio = ratios.ratios[label]
        if not 0.0 < ratio <= 1.0:
            raise RatioOutOfRange(f"splitting ratio for '{label}' must lie in (0, 1], got {ratio}")
        if not 1 <= outcome <= corrected.shape[0]:
            raise DimensionMismatch(f"mapped outcome c={outcome} outside 1..{corrected.shape[0]}")
        corrected[outcome - 1] /= ratio

    corrected *= counts.shots_per_setting / corrected.sum(axis=0, keepdims=True)
    logger.info("Applied splitting correction to outcomes %s", sorted(mapping))
    return counts.model_copy(update={"weights": corrected, "ratios": ratios, "mapping": dict(mapping)})


def sweep_setup(spec: WitnessSpec) -> tuple[PreparationFamily, PreparationFamily]:
    if spec.dims.nx != 3 or spec.dims.ny != 3:
        raise DimensionMismatch(f"visibility sweeps use three preparations per party, witness has {spec.dims}")
    return trigonal_preparations("A"), trigonal_preparations("B")


def noisy_assembly(spec: WitnessSpec, model: VisibilityModel) -> MeasurementAssembly:
    """Built-in noisy device matching the witness scenario: the Bell analyser or the product pair."""
    if (spec.dims.nz, spec.dims.nc) == (1, 3):
        return partial_bsm_noisy(model)
    if (spec.dims.nz, spec.dims.nc) == (2, 2):
        return unentangled_povm_pair(model)
    raise DimensionMismatch(f"no built-in device for {spec.dims.nz} settings with {spec.dims.nc} outcomes")


def visibility_sweep(
    spec: WitnessSpec, visibilities: list[float], kind: NoiseKind = "white"
) -> list[tuple[float, float]]:
    """Exact witness value of the trigonal strategy as the visibility degrades.

    Args:
        spec: witness_w (noisy Bell analyser) or witness_v (noisy product pair)
        visibilities: Grid of V in [0, 1]
        kind: Noise kind of the VisibilityModel

    Returns:
        (V, value) pairs in grid order
    """
    alice, bob = sweep_setup(spec)
    points = []
    for visibility in visibilities:
        table = born_table(alice, bob, noisy_assembly(spec, VisibilityModel(visibility=visibility, kind=kind)))
        points.append((float(visibility), evaluate(spec, table).value))
    return points


def crossing_visibility(points: list[tuple[float, float]], bound: float) -> float | None:
    """First V at which the sweep rises above ``bound``, linearly interpolated."""
    ordered = sorted(points)
    for (v0, w0), (v1, w1) in zip(ordered, ordered[1:], strict=False):
        if w0 <= bound < w1:
            return v0 + (bound - w0) * (v1 - v0) / (w1 - w0)
    return None


def prep_characterization(family: PreparationFamily) -> list[tuple[float, float]]:
    """(⟨Π_H⟩, ⟨Π_V⟩) = (⟨0|ρ|0⟩, ⟨1|ρ|1⟩) for each state."""
    return [(float(rho[0, 0].real), float(rho[1, 1].real)) for rho in family.densities]


def characterization_rows(
    family: PreparationFamily, measured: dict[str, tuple[float, float]] | None = None
) -> list[CharacterizationRow]:
    measured = MEASURED_PREPARATIONS if measured is None else measured
    rows = []
    for index, (theory_h, theory_v) in enumerate(prep_characterization(family)):
        label = f"{family.party}{index}"
        lab = measured.get(label)
        rows.append(
            CharacterizationRow(
                label=label,
                theory_h=theory_h,
                theory_v=theory_v,
                measured_h=lab[0] if lab else None,
                measured_v=lab[1] if lab else None,
            )
        )
    return rows


def lab_families() -> tuple[PreparationFamily, PreparationFamily]:
    """Alice's trigonal states and Bob's σ_x-relabelled ones, as characterized in the lab."""
    return trigonal_preparations("A"), relabel_sigma_x(trigonal_preparations("B"))


def sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".json")


def save_counts(counts: CountTable, csv_path: Path) -> Path:
    """Write counts as CSV ``z,x,y,c,count`` (c 1-based) plus a JSON sidecar.

    Returns:
        Path of the sidecar
    """
    nc, nx, ny, nz = counts.counts.shape
    index = pd.MultiIndex.from_product([range(nz), range(nx), range(ny), range(1, nc + 1)], names=COUNT_COLUMNS[:4])
    frame = pd.DataFrame(index=index).reset_index()
    z, x, y, c = (frame[column].to_numpy() for column in COUNT_COLUMNS[:4])
    frame["count"] = counts.counts[c - 1, x, y, z]
    frame.to_csv(csv_path, index=False)

    sidecar = CountSidecar(
        shots_per_setting=counts.shots_per_setting,
        dims=counts.dims,
        ratios=counts.ratios,
        mapping=counts.mapping,
        weights=counts.weights.tolist() if counts.weights is not None else None,
        provenance=counts.provenance,
    )
    path = sidecar_path(csv_path)
    path.write_text(sidecar.model_dump_json(indent=2))
    logger.info("Wrote counts to %s and metadata to %s", csv_path, path)
    return path


def _integer_column(frame: pd.DataFrame, column: str, csv_path: Path) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values) | (values != np.round(values))
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise CountsParseError(
            f"{csv_path}: '{column}' on line {row + 2} is not an integer: {frame[column].iloc[row]!r}"
        )
    return values.astype(np.int64)


def load_counts(csv_path: Path) -> CountTable:
    """Read a counts CSV and its sidecar back into a CountTable.

    Raises:
        CountsParseError: If either file is malformed or they disagree
    """
    try:
        sidecar = CountSidecar.model_validate_json(sidecar_path(csv_path).read_text())
    except FileNotFoundError as exc:
        raise CountsParseError(f"missing sidecar {sidecar_path(csv_path)}") from exc
    except ValidationError as exc:
        raise CountsParseError(f"invalid sidecar {sidecar_path(csv_path)}: {exc.errors()[0]['msg']}") from exc

    try:
        frame = pd.read_csv(csv_path)
    except (FileNotFoundError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise CountsParseError(f"cannot read counts {csv_path}: {exc}") from exc
    missing = [column for column in COUNT_COLUMNS if column not in frame.columns]
    if missing:
        raise CountsParseError(f"{csv_path} lacks columns {missing}")

    dims = sidecar.dims
    z, x, y, c, values = (_integer_column(frame, column, csv_path) for column in COUNT_COLUMNS)
    outside = (c < 1) | (c > dims.nc) | (x < 0) | (x >= dims.nx) | (y < 0) | (y >= dims.ny) | (z < 0) | (z >= dims.nz)
    if outside.any():
        raise CountsParseError(f"{csv_path} has indices outside dims {dims.model_dump()}")
    counts = np.zeros(dims.shape, dtype=np.int64)
    counts[c - 1, x, y, z] = values

    try:
        return CountTable(
            counts=counts,
            shots_per_setting=sidecar.shots_per_setting,
            weights=np.asarray(sidecar.weights) if sidecar.weights is not None else None,
            ratios=sidecar.ratios,
            mapping=sidecar.mapping,
            provenance=sidecar.provenance,
        )
    except ValidationError as exc:
        raise CountsParseError(f"{csv_path}: {exc.errors()[0]['msg']}") from exc

import logging
from pathlib import Path
from typing import Annotated

import typer
from pydantic import ValidationError

from entmeas.config import get_settings
from entmeas.errors import (
    BudgetExceeded,
    CountsParseError,
    DimensionMismatch,
    NoConvergence,
    RatioOutOfRange,
    VisibilityOutOfRange,
    WitnessParseError,
)
from entmeas.models import (
    BOUND_ORDER,
    CertificationReport,
    CharacterizationTable,
    Provenance,
    SeesawConfig,
    SimulationSummary,
    SplittingRatios,
    SweepReport,
    VisibilityModel,
    WitnessSpec,
    WitnessValue,
)
from entmeas.tools.bounds import classical_bound
from entmeas.tools.quantum import born_table
from entmeas.tools.seesaw import require_convergence, seesaw
from entmeas.tools.simulate import (
    apply_splitting_correction,
    bootstrap_stderr,
    characterization_rows,
    crossing_visibility,
    estimate,
    lab_families,
    load_counts,
    noisy_assembly,
    sample_counts,
    save_counts,
    sidecar_path,
    sweep_setup,
    visibility_sweep,
)
from entmeas.tools.witnesses import BUILTIN_WITNESSES, evaluate, resolve_witness, verdict
from entmeas.utils import (
    file_digest,
    format_bound_result,
    format_estimate,
    format_opt_result,
    format_prep_table,
    format_report,
    format_sweep,
    validate_grid,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_NO_CONVERGENCE = 4
EXIT_MISMATCH = 5

MODES = ("general", "locc", "separable")
NOISE_KINDS = ("white", "dephasing")

app = typer.Typer(no_args_is_help=True, help="Semi-device-independent certification of entangled measurements.")

JsonFlag = Annotated[bool, typer.Option("--json", help="Emit machine-readable JSON")]


def _fail(message: str, code: int) -> typer.Exit:
    typer.echo(f"error: {message}", err=True)
    return typer.Exit(code)


def _load_witness(name_or_path: str) -> WitnessSpec:
    try:
        return resolve_witness(name_or_path)
    except WitnessParseError as exc:
        raise _fail(f"cannot read witness '{name_or_path}': {exc}", EXIT_PARSE) from exc


def _witness_files(name_or_path: str) -> dict[str, str]:
    if name_or_path in BUILTIN_WITNESSES:
        return {}
    return {name_or_path: file_digest(Path(name_or_path))}


def _check_choice(value: str, choices: tuple[str, ...], flag: str) -> None:
    if value not in choices:
        raise _fail(f"{flag} must be one of {', '.join(choices)}, got '{value}'", EXIT_PARSE)


@app.callback()
def configure(
    *, verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Log at DEBUG level")] = False
) -> None:
    """Compute bounds, optimize strategies, simulate experiments and certify measurements."""
    level = logging.DEBUG if verbose else getattr(logging, get_settings().log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level)


@app.command()
def bounds(
    *,
    witness: str = "w",
    message_levels: int = 2,
    workers: int | None = None,
    json_output: JsonFlag = False,
) -> None:
    """Compute the classical bound of a witness by exhaustive enumeration.

    Args:
        witness: Built-in witness name (w, v) or path to a witness JSON file
        message_levels: Alphabet size of each forwarded message
        workers: Processes to split the enumeration across
        json_output: Emit the BoundResult as JSON
    """
    spec = _load_witness(witness)
    try:
        result = classical_bound(spec, message_levels=message_levels, workers=workers)
    except BudgetExceeded as exc:
        raise _fail(str(exc), EXIT_BUDGET) from exc
    except ValueError as exc:
        raise _fail(str(exc), EXIT_PARSE) from exc

    typer.echo(result.model_dump_json(indent=2) if json_output else format_bound_result(result))


@app.command()
def optimize(
    *,
    witness: str = "w",
    mode: str = "general",
    restarts: int | None = None,
    seed: int | None = None,
    max_iters: int = 500,
    rank: int = 4,
    workers: int | None = None,
    out: Path | None = None,
    strict: bool = False,
    history: bool = False,
    json_output: JsonFlag = False,
) -> None:
    """Maximize a witness with the see-saw over one class of measurements.

    Args:
        witness: Built-in witness name (w, v) or path to a witness JSON file
        mode: general, locc or separable
        restarts: Random restarts (default 100, or 1000 for separable)
        seed: Base seed; restart i uses seed XOR i
        max_iters: Maximum sweeps per restart (per penalty level in separable mode)
        rank: Product terms per effect in separable mode
        workers: Processes running restarts
        out: Where to write the best strategy as JSON
        strict: Exit with code 4 when the best restart did not converge
        history: Keep the per-sweep objective of every restart
        json_output: Emit the OptResult as JSON
    """
    _check_choice(mode, MODES, "--mode")
    spec = _load_witness(witness)
    settings = get_settings()
    try:
        config = SeesawConfig(
            mode=mode,
            restarts=restarts,
            max_iters=max_iters,
            seed=seed if seed is not None else settings.seed,
            separable_rank=rank,
            workers=workers or settings.workers,
            keep_history=history,
        )
    except ValidationError as exc:
        raise _fail(str(exc.errors()[0]["msg"]), EXIT_PARSE) from exc

    logger.info("Optimizing '%s' in %s mode with %d restarts", spec.name, mode, config.restarts)
    result = seesaw(spec, config)
    if out is not None:
        result.save(out)

    typer.echo(result.model_dump_json(indent=2) if json_output else format_opt_result(result, out))
    if strict:
        try:
            require_convergence(result)
        except NoConvergence as exc:
            raise _fail(str(exc), EXIT_NO_CONVERGENCE) from exc


@app.command()
def simulate(
    *,
    witness: str = "w",
    visibility: float = 1.0,
    kind: str = "white",
    shots: int = 100_000,
    seed: int | None = None,
    out: Path = Path("counts.csv"),
    json_output: JsonFlag = False,
) -> None:
    """Sample counts from the trigonal strategy on the built-in noisy device.

    Witness w uses the partial Bell-state analyser, witness v the product
    measurement pair. Counts go to a CSV with a JSON sidecar next to it.

    Args:
        witness: Built-in witness name (w, v) or path to a witness JSON file
        visibility: Interference visibility V in [0, 1]
        kind: Noise kind, white or dephasing
        shots: Events per (x, y, z)
        seed: Sampling seed
        out: Counts CSV path
        json_output: Emit a JSON summary
    """
    _check_choice(kind, NOISE_KINDS, "--kind")
    if shots < 1:
        raise _fail(f"--shots must be at least 1, got {shots}", EXIT_PARSE)
    spec = _load_witness(witness)
    chosen_seed = seed if seed is not None else get_settings().seed
    try:
        alice, bob = sweep_setup(spec)
        device = noisy_assembly(spec, VisibilityModel(visibility=visibility, kind=kind))
    except VisibilityOutOfRange as exc:
        raise _fail(str(exc), EXIT_PARSE) from exc
    except DimensionMismatch as exc:
        raise _fail(str(exc), EXIT_MISMATCH) from exc

    table = born_table(alice, bob, device)
    counts = sample_counts(table, shots, chosen_seed)
    counts = counts.model_copy(
        update={
            "provenance": {
                "seed": chosen_seed,
                "witness": spec.name,
                "visibility": visibility,
                "kind": kind,
            }
        }
    )
    sidecar = save_counts(counts, out)
    value, stderr = estimate(spec, counts)

    summary = SimulationSummary(
        witness=spec.name,
        visibility=visibility,
        kind=kind,
        shots_per_setting=shots,
        seed=chosen_seed,
        value=value,
        stderr=stderr,
        exact_value=evaluate(spec, table).value,
        counts_file=str(out),
        sidecar_file=str(sidecar),
    )
    if json_output:
        typer.echo(summary.model_dump_json(indent=2))
        return
    typer.echo(format_estimate(spec.name, value, stderr, counts))
    typer.echo(f"exact value: {summary.exact_value:.6f}")
    typer.echo(f"counts written to {out}")


@app.command()
def certify(
    counts_file: Path,
    *,
    witness: str = "w",
    ratios: Path | None = None,
    sigma: float | None = None,
    bootstrap: int = 0,
    json_output: JsonFlag = False,
) -> None:
    """Certify the measurement class from recorded counts.

    Args:
        counts_file: Counts CSV written by ``simulate`` or by the experiment
        witness: Built-in witness name (w, v) or path to a witness JSON file
        ratios: JSON file of splitting ratios to correct bunched outcomes
        sigma: Significance threshold in standard errors (default 3)
        bootstrap: Number of bootstrap resamples for a stderr cross-check (0 disables)
        json_output: Emit the CertificationReport as JSON
    """
    spec = _load_witness(witness)
    try:
        counts = load_counts(counts_file)
    except CountsParseError as exc:
        raise _fail(str(exc), EXIT_PARSE) from exc

    files = {str(counts_file): file_digest(counts_file)}
    files[str(sidecar_path(counts_file))] = file_digest(sidecar_path(counts_file))
    files.update(_witness_files(witness))

    try:
        if ratios is not None:
            try:
                correction = SplittingRatios.model_validate_json(ratios.read_text())
            except (OSError, ValidationError) as exc:
                raise _fail(f"cannot read splitting ratios {ratios}: {exc}", EXIT_PARSE) from exc
            files[str(ratios)] = file_digest(ratios)
            mapping = counts.mapping or correction.mapping
            if not mapping:
                raise _fail("splitting ratios given but no outcome mapping was found", EXIT_PARSE)
            counts = apply_splitting_correction(counts, correction, mapping)
        value, stderr = estimate(spec, counts)
        resampled = bootstrap_stderr(spec, counts, bootstrap, seed=get_settings().seed) if bootstrap else None
    except DimensionMismatch as exc:
        raise _fail(str(exc), EXIT_MISMATCH) from exc
    except RatioOutOfRange as exc:
        raise _fail(str(exc), EXIT_PARSE) from exc

    result = verdict(spec, WitnessValue(value=value, witness=spec.name), stderr, significance=sigma)
    report = CertificationReport(
        witness=spec.name,
        value=value,
        stderr=stderr,
        bootstrap_stderr=resampled,
        verdict=result,
        provenance=Provenance(
            files=files,
            seed=counts.provenance.get("seed"),
            config={"significance": result.significance, "bootstrap": bootstrap, "ratios": str(ratios or "")},
        ),
    )
    logger.info("Certified '%s': %s", spec.name, report.label)
    if json_output:
        typer.echo(report.model_dump_json(indent=2))
        return
    typer.echo(format_report(report))
    if resampled is not None:
        typer.echo(f"bootstrap stderr ({bootstrap} resamples): {resampled:.6f}")


def _sweep_bound(spec: WitnessSpec, top_value: float) -> tuple[str | None, float | None]:
    # strongest class bound that the noiseless device violates
    chosen = (None, None)
    for label in BOUND_ORDER:
        if label == "entangled_max" or label not in spec.bounds:
            continue
        if spec.bounds[label] < top_value:
            chosen = (label, spec.bounds[label])
    return chosen


@app.command()
def sweep(
    *,
    witness: str = "w",
    points: int = 21,
    kind: str = "white",
    json_output: JsonFlag = False,
) -> None:
    """Exact witness value of the trigonal strategy across visibilities 0..1.

    Args:
        witness: Built-in witness name (w, v) or path to a witness JSON file
        points: Grid points between 0 and 1 inclusive
        kind: Noise kind, white or dephasing
        json_output: Emit the sweep as JSON
    """
    _check_choice(kind, NOISE_KINDS, "--kind")
    spec = _load_witness(witness)
    try:
        grid = validate_grid(points)
        values = visibility_sweep(spec, grid, kind=kind)
    except DimensionMismatch as exc:
        raise _fail(str(exc), EXIT_MISMATCH) from exc
    except ValueError as exc:
        raise _fail(str(exc), EXIT_PARSE) from exc

    bound_class, bound = _sweep_bound(spec, values[-1][1])
    crossing = crossing_visibility(values, bound) if bound is not None else None
    report = SweepReport(
        witness=spec.name, kind=kind, points=values, bound_class=bound_class, bound=bound, crossing=crossing
    )
    if json_output:
        typer.echo(report.model_dump_json(indent=2))
        return
    typer.echo(format_sweep(spec.name, values, bound, crossing))


@app.command("prep-table")
def prep_table(*, json_output: JsonFlag = False) -> None:
    """Theory and laboratory H/V expectations of Alice's and Bob's prepared states."""
    alice, bob = lab_families()
    table = CharacterizationTable(rows=characterization_rows(alice) + characterization_rows(bob))
    if json_output:
        typer.echo(table.model_dump_json(indent=2))
        return
    typer.echo(format_prep_table(table.rows))

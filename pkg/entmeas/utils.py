import hashlib
import math
from pathlib import Path

import numpy as np

from entmeas.models import (
    BoundResult,
    CertificationReport,
    CharacterizationRow,
    ClassicalStrategy,
    CountTable,
    OptResult,
)


def file_digest(path: Path) -> str:
    """SHA-256 of a file's bytes, hex encoded."""
    return hashlib.sha256(path.read_bytes()).hexdigest()


def validate_grid(points: int) -> list[float]:
    """Evenly spaced visibilities 0..1 with ``points`` entries.

    Raises:
        ValueError: If fewer than two points are requested
    """
    if points < 2:
        raise ValueError(f"a sweep needs at least 2 points, got {points}")
    return [float(v) for v in np.linspace(0.0, 1.0, points)]


def _format_number(value: float) -> str:
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return f"{value:.6g}"


def format_strategy(strategy: ClassicalStrategy) -> str:
    """Render the three function tables of a deterministic strategy."""
    lines = [
        f"  alice_msg[x]: {strategy.alice_msg}",
        f"  bob_msg[y]:   {strategy.bob_msg}",
        "  charlie_out[b_A][b_B] -> c per z:",
    ]
    for b_a, row in enumerate(strategy.charlie_out):
        for b_b, outputs in enumerate(row):
            lines.append(f"    ({b_a}, {b_b}) -> {outputs}")
    return "\n".join(lines)


def format_bound_result(result: BoundResult) -> str:
    lines = [
        f"## Classical bound of witness '{result.witness}'",
        "",
        f"classical bound: {_format_number(result.max_value)}",
        f"strategies enumerated: {result.n_enumerated} ({result.message_levels}-level messages)",
        "",
        "Attaining strategy:",
        format_strategy(result.argmax),
    ]
    return "\n".join(lines)


def format_matrix(matrix: np.ndarray, indent: str = "    ") -> str:
    """Complex matrix with small entries shown as 0."""
    rows = []
    for row in matrix:
        cells = []
        for entry in row:
            re = 0.0 if abs(entry.real) < 1e-12 else entry.real
            im = 0.0 if abs(entry.imag) < 1e-12 else entry.imag
            cells.append(f"{re:+.4f}{im:+.4f}j")
        rows.append(indent + " ".join(cells))
    return "\n".join(rows)


def format_opt_result(result: OptResult, dump_path: Path | None = None) -> str:
    """Summary of a see-saw run.

    Shows the best value, where it came from, the POVM certificate (general
    mode) or completion residual (separable mode), and restart statistics.
    """
    values = [trace.value for trace in result.trace]
    lines = [
        f"## See-saw ({result.mode}) on witness '{result.witness}'",
        "",
        f"best value: {result.best_value:.9f} (restart {result.best_restart}, seed {result.config.seed})",
        f"converged: {'yes' if result.converged else 'no'}",
    ]
    if result.certificate_gap is not None:
        lines.append(f"certificate gap: {result.certificate_gap:.3e}")
    if result.completion_residual is not None:
        lines.append(f"completeness residual before completion: {result.completion_residual:.3e}")
    lines.append(
        f"restarts: {len(values)}, median {float(np.median(values)):.6f}, min {min(values):.6f}, max {max(values):.6f}"
    )
    lines.append(f"restarts within 1e-6 of the best: {result.success_fraction:.0%}")
    kicked = sum(trace.kicks > 0 for trace in result.trace)
    if kicked:
        lines.append(f"restarts perturbed after stalling: {kicked}")
    if result.degenerate_updates:
        lines.append(f"degenerate state updates: {result.degenerate_updates}")

    lines.extend(["", "Best preparations (Bloch vectors):"])
    for family in result.best_preparations:
        for index, state in enumerate(family.states):
            bloch = ", ".join(f"{component:+.4f}" for component in state.bloch)
            lines.append(f"  {family.party}{index}: ({bloch})")

    lines.extend(["", "Best measurement:"])
    for z, effects in enumerate(result.best_assembly.settings):
        for c, effect in enumerate(effects, start=1):
            lines.append(f"  M_{c}|{z}:")
            lines.append(format_matrix(effect))

    if dump_path is not None:
        lines.extend(["", f"strategy written to {dump_path}"])
    return "\n".join(lines)


def format_estimate(witness: str, value: float, stderr: float, counts: CountTable) -> str:
    lines = [
        f"## Simulated counts for witness '{witness}'",
        "",
        f"shots per setting: {counts.shots_per_setting}",
        f"estimate: {value:.6f} ± {stderr:.6f}",
    ]
    return "\n".join(lines)


def format_report(report: CertificationReport) -> str:
    """Certification verdict with the distance to every known class bound."""
    verdict = report.verdict
    lines = [
        f"## Certification with witness '{report.witness}'",
        "",
        f"estimate: {report.value:.6f} ± {report.stderr:.6f}",
        f"significance: {verdict.significance:g}σ",
        "",
        "| Class | Bound | Distance (σ) | Excluded |",
        "|-------|-------|--------------|----------|",
    ]
    for distance in verdict.distances:
        excluded = "yes" if distance.excluded else "no"
        lines.append(
            f"| {distance.bound_class} | {_format_number(distance.bound)} | {_format_number(distance.sigma)} "
            f"| {excluded} |"
        )
    lines.extend(["", f"verdict: {report.label}"])
    if report.provenance.files:
        lines.append("")
        for path, digest in report.provenance.files.items():
            lines.append(f"  {path}: sha256 {digest[:16]}…")
    return "\n".join(lines)


def format_sweep(
    witness: str, points: list[tuple[float, float]], bound: float | None, crossing: float | None
) -> str:
    lines = [
        f"## Visibility sweep for witness '{witness}'",
        "",
        "| V | value |",
        "|---|-------|",
    ]
    for visibility, value in points:
        lines.append(f"| {visibility:.4f} | {value:.6f} |")
    lines.append("")
    if bound is None:
        lines.append("no class bound is violated at V = 1")
    elif crossing is None:
        lines.append(f"bound {_format_number(bound)} is not crossed on this grid")
    else:
        lines.append(f"bound {_format_number(bound)} crossed at V ≈ {crossing:.4f}")
    return "\n".join(lines)


def format_prep_table(rows: list[CharacterizationRow]) -> str:
    """Theory and laboratory projector expectations side by side."""
    lines = [
        "| State | ⟨H⟩ theory | ⟨V⟩ theory | ⟨H⟩ lab | ⟨V⟩ lab |",
        "|-------|------------|------------|---------|---------|",
    ]
    for row in rows:
        lab_h = f"{row.measured_h:.3f}" if row.measured_h is not None else "-"
        lab_v = f"{row.measured_v:.3f}" if row.measured_v is not None else "-"
        lines.append(f"| {row.label} | {row.theory_h:.3f} | {row.theory_v:.3f} | {lab_h} | {lab_v} |")
    return "\n".join(lines)

"""Aggregation of run records into metric tables and figures.

Emits the evaluation tables as CSV plus an aligned-text rendering, and bar
charts for the headline metrics. Row construction is kept separate from file
writing so tests can verify aggregates against an independent reference.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from statistics import mean

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .runner import RunRecord

MATCH_BUFFER = 0.02

TABLE1_COLUMNS = [
    "Model",
    "Avg. Num. Iterations",
    "Num. Cases without Errors",
    "Num. Cases with Auto-Adjustment",
    "Num. Cases with Failures",
]
TABLE2_COLUMNS = ["Model", "Avg. Score"]
TABLE3_COLUMNS = ["Model", "Avg. Total Time (sec)", "Avg. Time per Iteration (sec)"]
TABLE4_COLUMNS = [
    "Model",
    "Avg. Quality Without Self-Eval. (R1-R4)",
    "Evaluation Criteria",
    "Subset Match",
    "Exact Match",
    "Avg. Quality With Self-Eval.",
]
TABLE5_COLUMNS = [
    "Model",
    "Description Length",
    "Avg. Quality Before Self-Improvement",
    "Avg. Quality After Self-Improvement",
    "Cases With Increased Quality",
    "Max. Improvement",
    "Max. Decline",
]
TABLE6_COLUMNS = [
    "Model",
    "Avg. Quality Before Self-Improvement",
    "Avg. Quality After Self-Improvement",
    "Max. Improvement",
    "Max. Decline",
]

BAND_LABELS = {
    "full": "Long (Original)",
    "medium": "Medium-Length (50-80%)",
    "short": "Short (15-35%)",
}


def _providers(records: list[RunRecord]) -> list[str]:
    seen: list[str] = []
    for record in records:
        if record.provider_name not in seen:
            seen.append(record.provider_name)
    return seen


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def table1_rows(records: list[RunRecord]) -> list[list[str]]:
    """Error-handling summary over baseline runs."""
    base = [r for r in records if r.strategy == "baseline"]
    rows = []
    for provider in _providers(base):
        runs = [r for r in base if r.provider_name == provider]
        clean = sum(1 for r in runs if r.status == "succeeded" and r.iterations == 1)
        adjusted = sum(1 for r in runs if r.auto_fixed)
        failures = sum(1 for r in runs if not r.succeeded)
        rows.append([
            provider,
            _fmt(mean(r.iterations for r in runs)),
            str(clean),
            str(adjusted),
            str(failures),
        ])
    return rows


def table2_rows(records: list[RunRecord]) -> list[list[str]]:
    """Average conformance score over baseline runs, plus the ground truth."""
    base = [r for r in records if r.strategy == "baseline"]
    rows = []
    for provider in _providers(base):
        scored = [
            r.quality for r in base
            if r.provider_name == provider and r.quality is not None
        ]
        rows.append([provider, _fmt(mean(scored)) if scored else "n/a"])
    gt_by_fixture: dict[str, float] = {}
    for record in records:
        if record.gt_quality is not None:
            gt_by_fixture.setdefault(record.fixture_id, record.gt_quality)
    if gt_by_fixture:
        rows.append(["Ground Truth", _fmt(mean(gt_by_fixture.values()))])
    return rows


def table3_rows(records: list[RunRecord]) -> list[list[str]]:
    """Timing summary over baseline runs."""
    base = [r for r in records if r.strategy == "baseline"]
    rows = []
    for provider in _providers(base):
        runs = [r for r in base if r.provider_name == provider]
        iteration_times = [t for r in runs for t in r.iteration_times]
        rows.append([
            provider,
            _fmt(mean(r.total_time for r in runs)),
            _fmt(mean(iteration_times)) if iteration_times else "n/a",
        ])
    return rows


def match_counts(records: list[RunRecord]) -> tuple[int, int]:
    """Subset and exact match counts for self-evaluation records.

    The selected candidate is a subset match when its reference quality is
    within MATCH_BUFFER of the best candidate, and an exact match when it ties
    the best exactly.
    """
    subset = exact = 0
    for record in records:
        qualities = record.candidate_qualities
        if not qualities or record.selected_index is None:
            continue
        chosen = qualities[record.selected_index]
        best = max(qualities)
        if chosen >= best - MATCH_BUFFER:
            subset += 1
        if chosen == best:
            exact += 1
    return subset, exact


def table4_rows(records: list[RunRecord]) -> list[list[str]]:
    """Self-evaluation analysis per provider and criteria set."""
    rows = []
    for provider in _providers(records):
        for strategy, criteria in (
            ("self_eval_general", "General"),
            ("self_eval_conformance", "Conformance"),
        ):
            runs = [
                r for r in records
                if r.provider_name == provider
                and r.strategy == strategy
                and r.candidate_qualities
            ]
            if not runs:
                continue
            count = len(runs[0].candidate_qualities)
            position_avgs = [
                mean(r.candidate_qualities[i] for r in runs) for i in range(count)
            ]
            subset, exact = match_counts(runs)
            with_scores = [r.quality for r in runs if r.quality is not None]
            rows.append([
                provider,
                f"{_fmt(min(position_avgs))}-{_fmt(max(position_avgs))}",
                criteria,
                f"{subset}/{len(runs)}",
                f"{exact}/{len(runs)}",
                _fmt(mean(with_scores)) if with_scores else "n/a",
            ])
    return rows


def _paired_input_runs(
    records: list[RunRecord],
) -> dict[tuple[str, str], list[tuple[float, float]]]:
    """(provider, band) -> (baseline quality, optimized quality) pairs."""
    baseline_quality = {
        (r.fixture_id, r.provider_name, r.band): r.quality
        for r in records
        if r.strategy == "baseline" and r.quality is not None
    }
    pairs: dict[tuple[str, str], list[tuple[float, float]]] = defaultdict(list)
    for record in records:
        if record.strategy != "input_opt" or record.quality is None:
            continue
        before = baseline_quality.get(
            (record.fixture_id, record.provider_name, record.band)
        )
        if before is None:
            continue
        pairs[(record.provider_name, record.band)].append((before, record.quality))
    return pairs


def table5_rows(records: list[RunRecord]) -> list[list[str]]:
    """Input-optimization before/after comparison per description band."""
    pairs = _paired_input_runs(records)
    rows = []
    for provider in _providers(records):
        for band in ("full", "medium", "short"):
            data = pairs.get((provider, band))
            if not data:
                continue
            deltas = [after - before for before, after in data]
            rows.append([
                provider,
                BAND_LABELS[band],
                _fmt(mean(before for before, _ in data)),
                _fmt(mean(after for _, after in data)),
                f"{sum(1 for d in deltas if d > 0)}/{len(data)}",
                f"+{max(deltas):.2f}",
                _fmt(min(deltas)),
            ])
    return rows


def table6_rows(records: list[RunRecord]) -> list[list[str]]:
    """Output-optimization before/after comparison."""
    rows = []
    for provider in _providers(records):
        runs = [
            r for r in records
            if r.provider_name == provider
            and r.strategy == "output_opt"
            and r.quality is not None
            and r.quality_before is not None
        ]
        if not runs:
            continue
        deltas = [r.quality - r.quality_before for r in runs]
        rows.append([
            provider,
            _fmt(mean(r.quality_before for r in runs)),
            _fmt(mean(r.quality for r in runs)),
            f"+{max(deltas):.2f}",
            _fmt(min(deltas)),
        ])
    return rows


def format_text_table(title: str, columns: list[str], rows: list[list[str]]) -> str:
    widths = [
        max(len(str(columns[i])), *(len(str(r[i])) for r in rows)) if rows
        else len(str(columns[i]))
        for i in range(len(columns))
    ]
    lines = [title]
    lines.append("  ".join(str(c).ljust(w) for c, w in zip(columns, widths)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append(
            "  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)).rstrip()
        )
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, columns: list[str], rows: list[list[str]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        writer.writerows(rows)


def _bar_chart(path: Path, title: str, labels: list[str], series: dict[str, list[float]], ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(labels)), 4))
    width = 0.8 / max(1, len(series))
    for offset, (name, values) in enumerate(series.items()):
        positions = [i + offset * width for i in range(len(labels))]
        ax.bar(positions, values, width=width, label=name)
    ax.set_xticks([i + width * (len(series) - 1) / 2 for i in range(len(labels))])
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_reports(records: list[RunRecord], out_dir: Path) -> list[Path]:
    """Writes every table (CSV + aligned text) and the figures.

    Returns the list of files written. Tables without data still get their
    CSV header so the column contract is always visible.
    """
    if not records:
        raise ValueError("no records to report on")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = [
        ("table1_error_handling", "Table 1: Error handling", TABLE1_COLUMNS, table1_rows(records)),
        ("table2_scores", "Table 2: Model quality", TABLE2_COLUMNS, table2_rows(records)),
        ("table3_times", "Table 3: Generation times", TABLE3_COLUMNS, table3_rows(records)),
        ("table4_self_evaluation", "Table 4: Self-evaluation", TABLE4_COLUMNS, table4_rows(records)),
        ("table5_input_optimization", "Table 5: Input optimization", TABLE5_COLUMNS, table5_rows(records)),
        ("table6_output_optimization", "Table 6: Output optimization", TABLE6_COLUMNS, table6_rows(records)),
    ]
    written: list[Path] = []
    text_blocks = []
    for stem, title, columns, rows in tables:
        csv_path = out_dir / f"{stem}.csv"
        _write_csv(csv_path, columns, rows)
        written.append(csv_path)
        if rows:
            text_blocks.append(format_text_table(title, columns, rows))
    text_path = out_dir / "tables.txt"
    text_path.write_text("\n".join(text_blocks), encoding="utf-8")
    written.append(text_path)
    written.extend(_write_figures(records, out_dir))
    return written


def _write_figures(records: list[RunRecord], out_dir: Path) -> list[Path]:
    written: list[Path] = []
    rows1 = table1_rows(records)
    if rows1:
        path = out_dir / "iterations.png"
        _bar_chart(
            path,
            "Average iterations per model (baseline)",
            [r[0] for r in rows1],
            {"Avg. iterations": [float(r[1]) for r in rows1]},
            "iterations",
        )
        written.append(path)
    rows2 = [r for r in table2_rows(records) if r[1] != "n/a"]
    if rows2:
        path = out_dir / "scores.png"
        _bar_chart(
            path,
            "Average conformance score per model (baseline)",
            [r[0] for r in rows2],
            {"Avg. score": [float(r[1]) for r in rows2]},
            "quality score",
        )
        written.append(path)
    rows3 = [r for r in table3_rows(records) if r[2] != "n/a"]
    if rows3:
        path = out_dir / "times.png"
        _bar_chart(
            path,
            "Generation time per model (baseline)",
            [r[0] for r in rows3],
            {
                "Avg. total (sec)": [float(r[1]) for r in rows3],
                "Avg. per iteration (sec)": [float(r[2]) for r in rows3],
            },
            "seconds",
        )
        written.append(path)
    rows6 = table6_rows(records)
    if rows6:
        path = out_dir / "output_optimization.png"
        _bar_chart(
            path,
            "Output optimization: before vs after",
            [r[0] for r in rows6],
            {
                "Before": [float(r[1]) for r in rows6],
                "After": [float(r[2]) for r in rows6],
            },
            "quality score",
        )
        written.append(path)
    rows5 = table5_rows(records)
    if rows5:
        path = out_dir / "input_optimization.png"
        _bar_chart(
            path,
            "Input optimization: before vs after",
            [f"{r[0]} / {r[1]}" for r in rows5],
            {
                "Before": [float(r[2]) for r in rows5],
                "After": [float(r[3]) for r in rows5],
            },
            "quality score",
        )
        written.append(path)
    return written

"""Run artifacts: trace and summary CSVs, the score chart and the manifest.

All writers are byte-deterministic: UTF-8, LF line endings, floats written
with ``repr`` and no timestamps.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from mixsel.bandit.trace import BanditTrace, RoundRecord
from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, MixselError
from mixsel.core.hashing import canonical_json, hash_object, sha256_hex

SUMMARY_HEADER = [
    "algorithm",
    "seeds",
    "final_score_mean",
    "final_score_sd",
    "regret_auc_mean",
    "regret_auc_sd",
]
TRACE_NAME = re.compile(r"^trace_(?P<label>.+)_seed(?P<seed>\d+)\.csv$")


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def trace_filename(trace: BanditTrace) -> str:
    return f"trace_{trace.algorithm}_seed{trace.seed}.csv"


def write_trace_csv(directory: Path, trace: BanditTrace) -> Path:
    return write_csv(directory / trace_filename(trace), trace.header(), trace.to_rows())


def read_trace_csv(path: str | Path, *, warm_start: int) -> BanditTrace:
    """Rebuilds the per-round part of a trace; final_score is not stored and reads back as nan."""
    target = Path(path)
    match = TRACE_NAME.match(target.name)
    label = match.group("label") if match else target.stem
    seed = int(match.group("seed")) if match else 0
    with target.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MixselError(EMPTY_INPUT, f"{target}: trace file is empty") from None
        alpha_cols = [i for i, name in enumerate(header) if name.startswith("alpha_")]
        if not alpha_cols or header[:2] != ["t", "I_t"]:
            raise MixselError(DIM_MISMATCH, f"{target}: not a trace file (header {header[:3]})")
        width = len(header)
        records: list[RoundRecord] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != width:
                raise MixselError(DIM_MISMATCH, f"{target}: line {line_no} has {len(row)} cells, expected {width}")
            values = dict(zip(header, row))
            records.append(
                RoundRecord(
                    t=int(values["t"]),
                    arm=int(values["I_t"]),
                    alpha=tuple(float(row[i]) for i in alpha_cols),
                    emp_loss=float(values["emp_loss"]),
                    pop_loss=float(values["pop_loss"]),
                    cum_regret=float(values["cum_regret"]),
                )
            )
    num_arms = len(alpha_cols)
    counts = np.full(num_arms, warm_start, dtype=np.int64)
    for record in records:
        counts[record.arm] += 1
    return BanditTrace(
        algorithm=label,
        seed=seed,
        num_arms=num_arms,
        warm_start=warm_start,
        records=tuple(records),
        counts=tuple(int(n) for n in counts),
        final_score=math.nan,
    )


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0 or np.all(np.isnan(arr)):
        return math.nan, math.nan
    mean = float(np.mean(arr))
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return mean, sd


@dataclass(frozen=True)
class SummaryRow:
    algorithm: str
    seeds: int
    final_score_mean: float
    final_score_sd: float
    regret_auc_mean: float
    regret_auc_sd: float

    def to_row(self) -> list[Any]:
        return [
            self.algorithm,
            self.seeds,
            self.final_score_mean,
            self.final_score_sd,
            self.regret_auc_mean,
            self.regret_auc_sd,
        ]

    def to_dict(self) -> dict[str, Any]:
        return dict(zip(SUMMARY_HEADER, self.to_row()))


def summarize(traces: Sequence[BanditTrace]) -> list[SummaryRow]:
    """One row per algorithm label, in first-seen order."""
    grouped: dict[str, list[BanditTrace]] = {}
    for trace in traces:
        grouped.setdefault(trace.algorithm, []).append(trace)
    rows = []
    for label, group in grouped.items():
        score_mean, score_sd = _mean_sd([t.final_score for t in group])
        auc_mean, auc_sd = _mean_sd([t.regret_auc() for t in group])
        rows.append(SummaryRow(label, len(group), score_mean, score_sd, auc_mean, auc_sd))
    return rows


def write_summary_csv(path: Path, rows: Sequence[SummaryRow]) -> Path:
    return write_csv(path, SUMMARY_HEADER, [row.to_row() for row in rows])


def score_series(traces: Sequence[BanditTrace]) -> dict[str, list[float]]:
    """Per-round score averaged over seeds: population loss when tracked, else the empirical loss."""
    grouped: dict[str, list[BanditTrace]] = {}
    for trace in traces:
        grouped.setdefault(trace.algorithm, []).append(trace)
    series = {}
    for label, group in grouped.items():
        column = "pop_loss" if all(t.has_population for t in group) else "emp_loss"
        curves = np.array([[getattr(r, column) for r in t.records] for t in group], dtype=np.float64)
        series[label] = np.mean(curves, axis=0).tolist()
    return series


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def render_score_svg(series: Mapping[str, Sequence[float]], *, title: str = "score vs round") -> str:
    width, height = 640, 400
    left, right, top, bottom = 70, 170, 30, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    finite = [v for ys in series.values() for v in ys if math.isfinite(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    rounds = max((len(ys) for ys in series.values()), default=1)

    def x_at(i: int) -> float:
        return left + plot_w * (i / max(rounds - 1, 1))

    def y_at(v: float) -> float:
        return top + plot_h * (1.0 - (v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="18" font-family="sans-serif" font-size="14">{_escape(title)}</text>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<text x="{left}" y="{height - 15}" font-family="sans-serif" font-size="11">1</text>',
        f'<text x="{left + plot_w}" y="{height - 15}" font-family="sans-serif" font-size="11" text-anchor="end">{rounds}</text>',
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 15}" font-family="sans-serif" font-size="11" text-anchor="middle">round</text>',
        f'<text x="{left - 5}" y="{top + 4}" font-family="sans-serif" font-size="11" text-anchor="end">{hi:.4g}</text>',
        f'<text x="{left - 5}" y="{top + plot_h}" font-family="sans-serif" font-size="11" text-anchor="end">{lo:.4g}</text>',
    ]
    for k, (label, ys) in enumerate(series.items()):
        color = _PALETTE[k % len(_PALETTE)]
        points = " ".join(f"{x_at(i):.2f},{y_at(v):.2f}" for i, v in enumerate(ys) if math.isfinite(v))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        legend_y = top + 16 * k + 10
        parts.append(f'<line x1="{left + plot_w + 10}" y1="{legend_y}" x2="{left + plot_w + 30}" y2="{legend_y}" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{left + plot_w + 35}" y="{legend_y + 4}" font-family="sans-serif" font-size="11">{_escape(label)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    return path


def write_json(path: Path, payload: Any) -> Path:
    return write_text(path, canonical_json(payload) + "\n")


def write_manifest(
    directory: Path,
    config: Mapping[str, Any],
    files: Sequence[Path],
    *,
    population: Mapping[str, Any] | None = None,
) -> Path:
    """Records the config hash, the sha256 of every emitted file and how the population objective was formed."""
    entries = {p.relative_to(directory).as_posix(): sha256_hex(p.read_bytes()) for p in sorted(files)}
    payload: dict[str, Any] = {"config_hash": hash_object(dict(config)), "files": entries}
    if population is not None:
        payload["population"] = dict(population)
    return write_json(directory / "manifest.json", payload)


__all__ = [
    "SUMMARY_HEADER",
    "SummaryRow",
    "read_trace_csv",
    "render_score_svg",
    "score_series",
    "summarize",
    "trace_filename",
    "write_csv",
    "write_json",
    "write_manifest",
    "write_summary_csv",
    "write_text",
    "write_trace_csv",
]

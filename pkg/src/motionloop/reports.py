"""Analysis reports over completed runs: trends, speed histograms, summaries.

Every report is a pure function of its inputs; emitting the same archive
twice produces byte-identical tables and plots. Plots are self-contained SVG
documents written without an external renderer, so they stay bit-stable in
CI. Numeric tables are the authoritative artifact; plot emission failures
never fail a report command.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clips import MotionClip, clip_mean_speed, finite_velocity
from .errors import EmptyArchive, EmptySet
from .loop import LoopState, evaluate_training_set
from .metrics import failure_rate_reduction, weighted_average

DEFAULT_SPEED_BINS = 40
DEFAULT_SPEED_RANGE = (0.0, 12.0)  # m/s


@dataclass
class TrendRow:
    loop_index: int
    sr: float
    g_mpjpe: float
    acc_dist: float
    vel_dist: float
    mean_speed: float
    clip_count: int


@dataclass
class TrendTable:
    """Frozen-tracker metrics per loop set (one row per completed loop)."""

    rows: list[TrendRow]

    def format_text(self) -> str:
        header = "loop\tsr\tg_mpjpe_mm\tacc_dist\tvel_dist\tmean_speed\tclip_count"
        lines = [header]
        for row in self.rows:
            lines.append(
                f"{row.loop_index}\t{row.sr:.4f}\t{row.g_mpjpe * 1000.0:.2f}"
                f"\t{row.acc_dist:.4f}\t{row.vel_dist:.4f}"
                f"\t{row.mean_speed:.4f}\t{row.clip_count}"
            )
        return "\n".join(lines) + "\n"


@dataclass
class Histogram:
    """Root-speed distribution of one corpus."""

    edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.float64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if not np.all(np.diff(self.edges) > 0):
            raise ValueError("histogram edges must be strictly increasing")
        if int(self.counts.sum()) != self.total:
            raise ValueError("histogram counts must sum to the total")

    def mean_speed(self) -> float:
        centers = 0.5 * (self.edges[:-1] + self.edges[1:])
        if self.total == 0:
            return 0.0
        return float((centers * self.counts).sum() / self.total)

    def format_text(self) -> str:
        lines = ["bin_lo\tbin_hi\tcount"]
        for lo, hi, count in zip(self.edges[:-1], self.edges[1:], self.counts):
            lines.append(f"{lo:.4f}\t{hi:.4f}\t{int(count)}")
        lines.append(f"total\t\t{self.total}")
        return "\n".join(lines) + "\n"


def report_trend(state: LoopState, tracker, policy_id: str, tau: float = 0.5) -> TrendTable:
    """Evaluate one frozen tracker across every loop's motion set."""
    if not state.archive:
        raise EmptyArchive("cannot build a trend table from an empty archive")
    rows = []
    for motion_set in state.archive:
        if not motion_set.pairs:
            rows.append(TrendRow(motion_set.loop_index, 0.0, 0.0, 0.0, 0.0, 0.0, 0))
            continue
        reports = evaluate_training_set(tracker, policy_id, motion_set.pairs, tau)
        speeds = [clip_mean_speed(clip) for clip in motion_set.clips()]
        rows.append(
            TrendRow(
                loop_index=motion_set.loop_index,
                sr=float(np.mean([r.clip_success_rate for r in reports])),
                g_mpjpe=float(np.mean([r.g_mpjpe for r in reports])),
                acc_dist=float(np.mean([r.acc_dist for r in reports])),
                vel_dist=float(np.mean([r.vel_dist for r in reports])),
                mean_speed=float(np.mean(speeds)),
                clip_count=len(motion_set.pairs),
            )
        )
    return TrendTable(rows=rows)


def root_speeds(clip: MotionClip) -> np.ndarray:
    """Per-transition root joint speeds (m/s)."""
    velocity = finite_velocity(clip).values[:, clip.root_index, :]
    return np.linalg.norm(velocity, axis=-1)


def report_velocity_distribution(
    corpora: dict[str, list[MotionClip]],
    bins: int = DEFAULT_SPEED_BINS,
    speed_range: tuple[float, float] = DEFAULT_SPEED_RANGE,
) -> dict[str, Histogram]:
    """Histogram root speeds per corpus over identical bins for comparability.

    Speeds beyond the top edge are clamped into the last bin so counts always
    sum to the frame-transition count.
    """
    if not corpora:
        raise EmptySet("need at least one corpus")
    edges = np.linspace(speed_range[0], speed_range[1], bins + 1)
    out = {}
    for name, clips in corpora.items():
        if not clips:
            raise EmptySet(f"corpus {name!r} has no clips")
        speeds = np.concatenate([root_speeds(clip) for clip in clips])
        clipped = np.minimum(speeds, edges[-1] - 1e-12)
        counts, _ = np.histogram(clipped, bins=edges)
        out[name] = Histogram(edges=edges, counts=counts, total=int(speeds.size))
    return out


@dataclass
class BenchmarkSummary:
    """Table-style success-rate summary with a clip-weighted average column."""

    set_names: list[str]
    rows: list[tuple[str, list[float], float]]  # (method, per-set rates, weighted avg)
    baseline: str
    reductions: list[tuple[str, float]] = field(default_factory=list)

    def format_text(self) -> str:
        header = "method\t" + "\t".join(self.set_names) + "\tavg"
        lines = [header]
        for method, rates, avg in self.rows:
            cells = "\t".join(f"{r:.1f}" for r in rates)
            lines.append(f"{method}\t{cells}\t{avg:.1f}")
        for method, reduction in self.reductions:
            lines.append(
                f"failure_rate_reduction\t{method} vs {self.baseline}\t{reduction:.1f}%"
            )
        return "\n".join(lines) + "\n"


def report_benchmark_summary(
    per_method: dict[str, list[tuple[str, float, int]]],
    baseline: str,
) -> BenchmarkSummary:
    """Weighted per-method averages plus failure-rate reduction vs a baseline.

    ``per_method`` maps method name to (set_name, success percent, clip count)
    triples; all methods must cover the same sets in the same order.
    """
    if not per_method:
        raise EmptySet("need at least one method row")
    if baseline not in per_method:
        raise EmptySet(f"baseline row {baseline!r} not present")
    set_names = [name for name, _rate, _count in next(iter(per_method.values()))]
    rows = []
    for method, cells in per_method.items():
        if [name for name, _r, _c in cells] != set_names:
            raise EmptySet(f"method {method!r} does not match the shared set list")
        avg = weighted_average([(rate, count) for _name, rate, count in cells])
        rows.append((method, [rate for _name, rate, _count in cells], avg))
    avg_by_method = {method: avg for method, _rates, avg in rows}
    reductions = [
        (method, failure_rate_reduction(avg_by_method[baseline], avg))
        for method, _rates, avg in rows
        if method != baseline
    ]
    return BenchmarkSummary(
        set_names=set_names, rows=rows, baseline=baseline, reductions=reductions
    )


# --- self-contained SVG plots ---

def line_plot_svg(
    series: dict[str, list[tuple[float, float]]],
    title: str,
    width: int = 640,
    height: int = 400,
) -> str:
    """Minimal deterministic SVG line plot (no external renderer)."""
    margin = 50.0
    points = [pt for pts in series.values() for pt in pts]
    if not points:
        raise EmptySet("nothing to plot")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def to_px(x, y):
        px = margin + (x - x_lo) / x_span * (width - 2 * margin)
        py = height - margin - (y - y_lo) / y_span * (height - 2 * margin)
        return f"{px:.2f},{py:.2f}"

    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{margin}" y="{height - margin + 18}" font-size="11">{x_lo:.3g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 18}" text-anchor="end" '
        f'font-size="11">{x_hi:.3g}</text>',
        f'<text x="{margin - 6}" y="{height - margin}" text-anchor="end" '
        f'font-size="11">{y_lo:.3g}</text>',
        f'<text x="{margin - 6}" y="{margin + 4}" text-anchor="end" font-size="11">{y_hi:.3g}</text>',
    ]
    for i, (name, pts) in enumerate(series.items()):
        color = palette[i % len(palette)]
        coords = " ".join(to_px(x, y) for x, y in pts)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        parts.append(
            f'<text x="{width - margin}" y="{margin + 16 * i}" text-anchor="end" '
            f'font-size="12" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def trend_plot_svg(table: TrendTable) -> str:
    series = {
        "success_rate": [(float(r.loop_index), r.sr) for r in table.rows],
        "mean_speed": [(float(r.loop_index), r.mean_speed) for r in table.rows],
    }
    return line_plot_svg(series, "Frozen-tracker trend per loop")


def histogram_plot_svg(histograms: dict[str, Histogram]) -> str:
    series = {}
    for name, hist in histograms.items():
        centers = 0.5 * (hist.edges[:-1] + hist.edges[1:])
        fractions = hist.counts / max(hist.total, 1)
        series[name] = list(zip(centers.tolist(), fractions.tolist()))
    return line_plot_svg(series, "Root speed distribution")

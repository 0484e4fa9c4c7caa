"""Per-step metric log, CSV export, SVG line charts and run summaries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .engine import StepReport
from .errors import InvalidParameter

SIG_DIGITS = 12

KNOWLEDGE_HEADER = ["step", "layer", "mean_knowledge"]
FLOWS_HEADER = ["step", "source_layer", "target_layer", "inflow_gain", "inflow_loss", "floor_correction"]
COMPETENCE_HEADER = ["step", "competence", "mean_value"]
OUTFLOWS_HEADER = ["step", "layer", "outflow_gain", "outflow_loss"]
VERTICAL_HEADER = ["step", "source_layer", "target_layer", "coefficient"]
ACTIVITY_HEADER = ["step", "population", "total_knowledge", "horizontal_events",
                   "forgetting_events", "self_learning_events", "violations"]


def fmt(x: float) -> str:
    return f"{float(x) + 0.0:.{SIG_DIGITS}g}"


@dataclass
class TimeSeriesLog:
    layer_labels: List[str]
    competence_names: List[str] = field(default_factory=list)
    reports: List[StepReport] = field(default_factory=list)
    metadata: Dict[str, object] = field(default_factory=dict)

    def append(self, report: StepReport) -> None:
        expected = self.reports[-1].step + 1 if self.reports else 0
        if report.step != expected:
            raise InvalidParameter(f"expected step {expected}, got {report.step}")
        self.reports.append(report)

    def __len__(self) -> int:
        return len(self.reports)

    @property
    def steps(self) -> np.ndarray:
        return np.array([r.step for r in self.reports])

    def series(self, metric: str) -> np.ndarray:
        """``(steps, lines)`` array for a chartable metric."""
        if metric not in METRICS:
            raise InvalidParameter(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
        if metric == "competence" and not self.competence_names:
            raise InvalidParameter("log has no competence values")
        return np.array([METRICS[metric](r) for r in self.reports], dtype=float).reshape(len(self.reports), -1)

    def line_labels(self, metric: str) -> List[str]:
        if metric == "competence":
            return list(self.competence_names)
        if metric == "total_knowledge":
            return ["total"]
        return list(self.layer_labels)


METRICS = {
    "knowledge": lambda r: r.mean_knowledge,
    "inflow": lambda r: r.inflow_gain,
    "inflow_loss": lambda r: r.inflow_loss,
    "outflow": lambda r: r.outflow_gain,
    "outflow_loss": lambda r: r.outflow_loss,
    "competence": lambda r: r.competence_mean,
    "total_knowledge": lambda r: [r.total_knowledge],
}

METRIC_TITLES = {
    "knowledge": "Mean knowledge per layer",
    "inflow": "Knowledge incoming from vertical diffusion",
    "inflow_loss": "Knowledge lost through vertical diffusion",
    "outflow": "Knowledge outgoing from vertical diffusion",
    "outflow_loss": "Decrements propagated by vertical diffusion",
    "competence": "Mean competence",
    "total_knowledge": "Total knowledge",
}


# -- CSV ---------------------------------------------------------------------


def _write(path: Path, header: Sequence[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def export_csv(log: TimeSeriesLog, destination) -> List[Path]:
    if not log.reports:
        raise InvalidParameter("cannot export an empty log")
    out = Path(destination)
    out.mkdir(parents=True, exist_ok=True)
    L = len(log.layer_labels)
    pairs = [(j, n) for j in range(L) for n in range(L) if j != n]
    R = log.reports
    files = [
        _write(out / "knowledge.csv", KNOWLEDGE_HEADER,
               ([r.step, j, fmt(r.mean_knowledge[j])] for r in R for j in range(L))),
        _write(out / "flows.csv", FLOWS_HEADER,
               ([r.step, j, n, fmt(r.flow_gain[j, n]), fmt(r.flow_loss[j, n]), fmt(r.floor_correction[j, n])]
                for r in R for j, n in pairs)),
        _write(out / "outflows.csv", OUTFLOWS_HEADER,
               ([r.step, j, fmt(r.outflow_gain[j]), fmt(r.outflow_loss[j])] for r in R for j in range(L))),
        _write(out / "vertical.csv", VERTICAL_HEADER,
               ([r.step, j, n, fmt(r.vertical_matrix[j, n])] for r in R for j, n in pairs)),
        _write(out / "activity.csv", ACTIVITY_HEADER,
               ([r.step, r.population, fmt(r.total_knowledge), r.horizontal_events,
                 r.forgetting_events, r.self_learning_events, r.violations] for r in R)),
    ]
    if log.competence_names:
        files.append(_write(out / "competence.csv", COMPETENCE_HEADER,
                            ([r.step, name, fmt(r.competence_mean[a])]
                             for r in R for a, name in enumerate(log.competence_names))))
    return files


def read_csv(path) -> List[Dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_knowledge_series(path) -> np.ndarray:
    """``(steps, layers)`` mean knowledge parsed back from knowledge.csv."""
    rows = read_csv(path)
    steps = sorted({int(r["step"]) for r in rows})
    layers = sorted({int(r["layer"]) for r in rows})
    out = np.zeros((len(steps), len(layers)))
    for r in rows:
        out[int(r["step"]) - steps[0], int(r["layer"])] = float(r["mean_knowledge"])
    return out


def check_flow_ledger(run_dir, rel_tol: float = 10.0 ** (1 - SIG_DIGITS)) -> List[str]:
    """Rows of flows.csv where received != coupling * source delta - floor correction.

    Works from the exported files alone. The tolerance is the rounding of
    12-significant-digit text, scaled by the magnitude of the terms.
    vertical.csv holds the shared matrix only, so runs with per-agent
    overrides cannot be checked this way.
    """
    run_dir = Path(run_dir)
    coeff = {(r["step"], r["source_layer"], r["target_layer"]): float(r["coefficient"])
             for r in read_csv(run_dir / "vertical.csv")}
    outflow = {(r["step"], r["layer"]): (float(r["outflow_gain"]), float(r["outflow_loss"]))
               for r in read_csv(run_dir / "outflows.csv")}
    bad = []
    for r in read_csv(run_dir / "flows.csv"):
        key = (r["step"], r["source_layer"], r["target_layer"])
        gain, loss, corr = float(r["inflow_gain"]), float(r["inflow_loss"]), float(r["floor_correction"])
        og, ol = outflow[(r["step"], r["source_layer"])]
        c = coeff[key]
        lhs = gain - loss
        rhs = c * (og - ol) - corr
        scale = abs(gain) + abs(loss) + abs(c * og) + abs(c * ol) + abs(corr)
        if abs(lhs - rhs) > rel_tol * max(scale, 1e-300):
            bad.append(f"step {key[0]} {key[1]}->{key[2]}: received {lhs!r} vs expected {rhs!r}")
    return bad


# -- SVG ---------------------------------------------------------------------

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"]
W, H = 720, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 50


def _nice_ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    ticks = []
    x = first
    while x <= hi + step * 1e-9:
        ticks.append(round(x, 12))
        x += step
    return ticks


def render_svg(log: TimeSeriesLog, metric: str, destination, title: Optional[str] = None) -> Path:
    """Line chart with one polyline per layer or competence."""
    data = log.series(metric)
    labels = log.line_labels(metric)
    steps = log.steps.astype(float)
    x0, x1 = float(steps.min()), float(steps.max())
    y0, y1 = min(0.0, float(np.nanmin(data))), float(np.nanmax(data))
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 <= y0:
        y1 = y0 + 1.0
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    parts = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="15">'
        f'{escape(title or METRIC_TITLES[metric])}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        parts.append(f'<line x1="{px(t):.2f}" y1="{TOP + ph}" x2="{px(t):.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{px(t):.2f}" y="{TOP + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        parts.append(f'<line x1="{LEFT - 5}" y1="{py(t):.2f}" x2="{LEFT}" y2="{py(t):.2f}" stroke="black"/>')
        parts.append(f'<text x="{LEFT - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    parts.append(f'<text x="{LEFT + pw / 2:.1f}" y="{H - 10}" text-anchor="middle">step</text>')
    parts.append(f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">{escape(metric.replace("_", " "))}</text>')
    for q, label in enumerate(labels):
        color = PALETTE[q % len(PALETTE)]
        pts = [(px(s), py(v)) for s, v in zip(steps, data[:, q])]
        if len(pts) == 1:
            parts.append(f'<circle cx="{pts[0][0]:.2f}" cy="{pts[0][1]:.2f}" r="3" fill="{color}"/>')
        else:
            coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = TOP + 10 + 18 * q
        parts.append(f'<line x1="{LEFT + pw + 15}" y1="{ly}" x2="{LEFT + pw + 35}" y2="{ly}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{LEFT + pw + 40}" y="{ly + 4}">{escape(str(label))}</text>')
    parts.append("</svg>")
    path = Path(destination)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n")
    return path


# -- summary -----------------------------------------------------------------


@dataclass
class LayerSummary:
    label: str
    final: float
    peak: float
    peak_step: int
    trough: float
    trough_step: int


@dataclass
class RunSummary:
    layers: List[LayerSummary]
    competences: Dict[str, float]
    final_population: int
    final_total_knowledge: float
    metadata: Dict[str, object] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = []
        for key in sorted(self.metadata):
            lines.append(f"{key}: {self.metadata[key]}")
        lines.append(f"final_population: {self.final_population}")
        lines.append(f"final_total_knowledge: {fmt(self.final_total_knowledge)}")
        for s in self.layers:
            lines.append(f"layer {s.label}: final={fmt(s.final)} peak={fmt(s.peak)}@{s.peak_step} "
                         f"trough_after_peak={fmt(s.trough)}@{s.trough_step}")
        for name, v in self.competences.items():
            lines.append(f"competence {name}: final={fmt(v)}")
        return "\n".join(lines) + "\n"


def peak_and_trough(steps: Sequence[int], values: Sequence[float]):
    """Peak (first maximum) and the minimum at or after it."""
    v = np.asarray(values, dtype=float)
    p = int(np.argmax(v))
    q = p + int(np.argmin(v[p:]))
    return float(v[p]), int(steps[p]), float(v[q]), int(steps[q])


def summarize(log: TimeSeriesLog) -> RunSummary:
    if not log.reports:
        raise InvalidParameter("cannot summarize an empty log")
    steps = log.steps
    know = log.series("knowledge")
    layers = []
    for j, label in enumerate(log.layer_labels):
        peak, ps, trough, ts = peak_and_trough(steps, know[:, j])
        layers.append(LayerSummary(label, float(know[-1, j]), peak, ps, trough, ts))
    last = log.reports[-1]
    comps = {}
    if log.competence_names:
        comps = {n: float(last.competence_mean[a]) for a, n in enumerate(log.competence_names)}
    meta = {k: v for k, v in log.metadata.items() if k in ("seed", "config_digest", "stage")}
    return RunSummary(layers, comps, last.population, last.total_knowledge, meta)

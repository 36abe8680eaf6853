"""Deterministic standalone SVG plots of the experiment CSVs.

Only the stdlib is used so the output is byte-identical across runs: fixed
canvas, fixed number formatting, series drawn in sorted key order.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from ..errors import MissingInput
from .tables import read_csv

W, H = 640, 440
PAD_L, PAD_R, PAD_T, PAD_B = 70, 150, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _f(x):
    return f"{x:.2f}"


class _Axes:
    def __init__(self, xlim, ylim, logx=False, logy=False):
        self.logx, self.logy = logx, logy
        self.x0, self.x1 = (self._t(v, logx) for v in xlim)
        self.y0, self.y1 = (self._t(v, logy) for v in ylim)
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0

    @staticmethod
    def _t(v, log):
        return math.log10(v) if log else float(v)

    def px(self, x):
        u = (self._t(x, self.logx) - self.x0) / (self.x1 - self.x0)
        return PAD_L + u * (W - PAD_L - PAD_R)

    def py(self, y):
        u = (self._t(y, self.logy) - self.y0) / (self.y1 - self.y0)
        return H - PAD_B - u * (H - PAD_T - PAD_B)


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0 ** e for e in range(a, b + 1) if lo <= 10.0 ** e * 1.0000001 and 10.0 ** e <= hi * 1.0000001]
    step = 10 ** math.floor(math.log10(max(hi - lo, 1e-300)))
    if (hi - lo) / step < 4:
        step /= 2
    start = math.ceil(lo / step) * step
    out, v = [], start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def _frame(ax, xlim, ylim, title, xlabel, ylabel):
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
        f'<text x="{W // 2}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<rect x="{PAD_L}" y="{PAD_T}" width="{W - PAD_L - PAD_R}" height="{H - PAD_T - PAD_B}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _ticks(*xlim, ax.logx):
        x = ax.px(t)
        out.append(f'<line x1="{_f(x)}" y1="{H - PAD_B}" x2="{_f(x)}" y2="{H - PAD_B + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(x)}" y="{H - PAD_B + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="10">{t:g}</text>')
    for t in _ticks(*ylim, ax.logy):
        y = ax.py(t)
        out.append(f'<line x1="{PAD_L - 5}" y1="{_f(y)}" x2="{PAD_L}" y2="{_f(y)}" stroke="black"/>')
        out.append(f'<text x="{PAD_L - 8}" y="{_f(y + 3)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{t:g}</text>')
    out.append(f'<text x="{(PAD_L + W - PAD_R) // 2}" y="{H - 10}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(PAD_T + H - PAD_B) // 2}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12" transform="rotate(-90 16 {(PAD_T + H - PAD_B) // 2})">{escape(ylabel)}</text>')
    return out


def _legend(out, labels):
    for i, lab in enumerate(labels):
        y = PAD_T + 14 + 16 * i
        x = W - PAD_R + 10
        c = COLORS[i % len(COLORS)]
        out.append(f'<line x1="{x}" y1="{y}" x2="{x + 20}" y2="{y}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{x + 25}" y="{y + 4}" font-family="sans-serif" font-size="11">{escape(lab)}</text>')


def _polyline(ax, pts, color, dash=None):
    d = " ".join(f"{_f(ax.px(x))},{_f(ax.py(y))}" for x, y in pts)
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.5"{extra}/>'


def loglog_svg(series, title, xlabel="dofs", ylabel="L2 error"):
    """One polyline per series; ``series`` maps label -> list of (x, y) with positive values."""
    pos = {k: sorted((x, y) for x, y in v if x > 0 and y > 0) for k, v in series.items()}
    pos = {k: v for k, v in pos.items() if v}
    if not pos:
        raise MissingInput("no positive data to plot")
    xs = [x for v in pos.values() for x, _ in v]
    ys = [y for v in pos.values() for _, y in v]
    xlim, ylim = (min(xs), max(xs)), (min(ys), max(ys))
    ax = _Axes(xlim, ylim, True, True)
    out = _frame(ax, xlim, ylim, title, xlabel, ylabel)
    labels = sorted(pos)
    for i, k in enumerate(labels):
        out.append(_polyline(ax, pos[k], COLORS[i % len(COLORS)]))
    _legend(out, labels)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def projection_svgs(csv_path):
    """One SVG per k: error against dofs, one series per smoothing number."""
    rows = read_csv(csv_path)
    svgs = {}
    for k in sorted({int(r["k"]) for r in rows}):
        series = {}
        for r in rows:
            if int(r["k"]) != k:
                continue
            series.setdefault(f"n_s={int(r['n_s'])}", []).append((float(r["dofs"]), float(r["error"])))
        svgs[f"projection_k{k}.svg"] = loglog_svg(series, f"L2 projection error, k={k}")
    return svgs


def spectrum_svg(csv_path):
    """Staircase of computed eigenvalues per (l, L) with gray analytic lines."""
    rows = read_csv(csv_path)
    series = {}
    targets = {}
    for r in rows:
        key = f"l={int(r['l'])}, L={int(r['L'])}"
        series.setdefault(key, []).append((int(r["index"]), float(r["eigenvalue"])))
        targets[int(r["index"])] = float(r["target"])
    n = max(targets)
    ylim = (0.0, max(max(y for v in series.values() for _, y in v), max(targets.values())) * 1.05)
    xlim = (0.5, n + 0.5)
    ax = _Axes(xlim, ylim)
    out = _frame(ax, xlim, ylim, "Maxwell eigenvalues", "index", "eigenvalue")
    for val in sorted(set(targets.values())):
        y = ax.py(val)
        out.append(f'<line x1="{PAD_L}" y1="{_f(y)}" x2="{W - PAD_R}" y2="{_f(y)}" '
                   'stroke="#bbbbbb" stroke-width="0.8"/>')
    labels = sorted(series)
    for i, k in enumerate(labels):
        pts = []
        for idx, lam in sorted(series[k]):
            pts += [(idx - 0.5, lam), (idx + 0.5, lam)]
        out.append(_polyline(ax, pts, COLORS[i % len(COLORS)]))
    _legend(out, labels)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def timing_svg(csv_path):
    """Grouped bars of the four phases per level ``l``."""
    rows = sorted(read_csv(csv_path), key=lambda r: int(r["l"]))
    phases = ("t_subd", "t_assem", "t_unref", "t_solver")
    vals = [[float(r[p]) for p in phases] for r in rows]
    top = max(max(v) for v in vals) * 1.1 or 1.0
    xlim, ylim = (0.0, float(len(rows))), (0.0, top)
    ax = _Axes(xlim, ylim)
    out = _frame(ax, xlim, ylim, "Timing per phase", "l", "seconds")
    bw = (ax.px(1) - ax.px(0)) / (len(phases) + 1)
    for i, (r, v) in enumerate(zip(rows, vals)):
        for j, t in enumerate(v):
            x = ax.px(i) + bw * (j + 0.5)
            y = ax.py(t)
            out.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(bw)}" height="{_f(ax.py(0) - y)}" '
                       f'fill="{COLORS[j]}"/>')
        out.append(f'<text x="{_f(ax.px(i + 0.5))}" y="{H - PAD_B + 32}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="10">l={int(r["l"])}</text>')
    _legend(out, list(phases))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plots(results, out=None):
    """Render every known CSV found in ``results`` (a directory).

    Returns
    -------
    dict
        File name -> SVG text; files are also written to ``out`` (default:
        the results directory).

    Raises
    ------
    MissingInput
        No known CSV is present, or one of them is empty.
    """
    d = Path(results)
    out = Path(out) if out is not None else d
    svgs = {}
    found = False
    if (d / "projection.csv").exists():
        found = True
        svgs.update(projection_svgs(d / "projection.csv"))
    if (d / "maxwell_spectrum.csv").exists():
        found = True
        svgs["maxwell_spectrum.svg"] = spectrum_svg(d / "maxwell_spectrum.csv")
    if (d / "timing.csv").exists():
        found = True
        svgs["timing.svg"] = timing_svg(d / "timing.csv")
    if not found:
        raise MissingInput(f"no result CSV (projection, maxwell_spectrum, timing) in {d}")
    out.mkdir(parents=True, exist_ok=True)
    for name, text in svgs.items():
        (out / name).write_text(text, encoding="utf-8")
    return svgs

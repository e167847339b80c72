"""Static SVG 1.1 emission for sweep curves, boundary heatmaps, and
training-diagnostic time series.

The renderer is hand-rolled so the byte content of a plot depends only on
the input CSV: identical invocations produce identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import DataFormatError

PLOT_KINDS = ("sweep_curve", "boundary_heatmap", "variance_timeseries")

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 20, 50

SERIES_COLORS = ("#1f6fb2", "#d1495b", "#3a7d44", "#8c5e9e", "#c57f2e",
                 "#3b8ea5", "#a23b72", "#5c5c5c")


def _read_csv(csv_path):
    try:
        with open(csv_path, newline="") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise DataFormatError(f"cannot read {csv_path}: {exc}") from exc
    if not rows or len(rows) < 2:
        raise DataFormatError(f"{csv_path}: empty CSV (need a header and data rows)")
    header, data = rows[0], rows[1:]
    for i, row in enumerate(data):
        if len(row) != len(header):
            raise DataFormatError(f"{csv_path}: row {i + 2} has {len(row)} fields, "
                                  f"expected {len(header)}")
    return header, data


def _floats(rows, col):
    out = []
    for i, row in enumerate(rows):
        try:
            out.append(float(row[col]))
        except ValueError as exc:
            raise DataFormatError(f"row {i + 2}, column {col + 1}: "
                                  f"non-numeric value {row[col]!r}") from exc
    return out


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".") or "0"


class _Canvas:
    """Accumulates SVG elements over a fixed data-to-pixel transform."""

    def __init__(self, x_range, y_range):
        x_lo, x_hi = x_range
        y_lo, y_hi = y_range
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            y_hi = y_lo + 1.0
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi
        self.parts: list[str] = []

    def px(self, x: float) -> float:
        frac = (x - self.x_lo) / (self.x_hi - self.x_lo)
        return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        frac = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)

    def add(self, element: str):
        self.parts.append(element)

    def axes(self, x_label: str, y_label: str):
        x0, x1 = MARGIN_L, WIDTH - MARGIN_R
        y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
        self.add(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
        self.add(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
        for i in range(5):
            xv = self.x_lo + i * (self.x_hi - self.x_lo) / 4
            yv = self.y_lo + i * (self.y_hi - self.y_lo) / 4
            xp, yp = self.px(xv), self.py(yv)
            self.add(f'<line x1="{_fmt(xp)}" y1="{y0}" x2="{_fmt(xp)}" y2="{y0 + 5}" stroke="black"/>')
            self.add(f'<text x="{_fmt(xp)}" y="{y0 + 18}" font-size="11" '
                     f'text-anchor="middle">{_fmt(xv)}</text>')
            self.add(f'<line x1="{x0 - 5}" y1="{_fmt(yp)}" x2="{x0}" y2="{_fmt(yp)}" stroke="black"/>')
            self.add(f'<text x="{x0 - 8}" y="{_fmt(yp + 4)}" font-size="11" '
                     f'text-anchor="end">{_fmt(yv)}</text>')
        self.add(f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 12}" font-size="13" '
                 f'text-anchor="middle">{x_label}</text>')
        self.add(f'<text x="16" y="{(y0 + y1) / 2}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 16 {(y0 + y1) / 2})">{y_label}</text>')

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
            f"{body}\n</svg>\n"
        )


def _series_polyline(canvas, xs, ys, color):
    pts = " ".join(f"{_fmt(canvas.px(x))},{_fmt(canvas.py(y))}" for x, y in zip(xs, ys))
    canvas.add(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')


def _series_band(canvas, xs, lo, hi, color):
    fwd = [f"{_fmt(canvas.px(x))},{_fmt(canvas.py(y))}" for x, y in zip(xs, hi)]
    back = [f"{_fmt(canvas.px(x))},{_fmt(canvas.py(y))}"
            for x, y in zip(reversed(xs), list(reversed(lo)))]
    canvas.add(f'<polygon points="{" ".join(fwd + back)}" fill="{color}" '
               f'fill-opacity="0.18" stroke="none"/>')


def _legend(canvas, names):
    for i, name in enumerate(names):
        color = SERIES_COLORS[i % len(SERIES_COLORS)]
        y = MARGIN_T + 14 + 16 * i
        x = WIDTH - MARGIN_R - 170
        canvas.add(f'<line x1="{x}" y1="{y - 4}" x2="{x + 22}" y2="{y - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        canvas.add(f'<text x="{x + 28}" y="{y}" font-size="12">{name}</text>')


def _render_sweep_curve(header, data) -> str:
    """Schema: value, then (name_mean, name_std) column pairs."""
    if header[0] != "value":
        raise DataFormatError("sweep_curve CSV must start with a 'value' column")
    pairs = []
    col = 1
    while col < len(header):
        name = header[col]
        if not name.endswith("_mean"):
            raise DataFormatError(f"expected a *_mean column at position {col + 1}, "
                                  f"got {name!r}")
        stem = name[:-5]
        if col + 1 >= len(header) or header[col + 1] != f"{stem}_std":
            raise DataFormatError(f"column {name!r} is missing its {stem}_std pair")
        pairs.append((stem, col, col + 1))
        col += 2
    if not pairs:
        raise DataFormatError("sweep_curve CSV has no mean/std column pairs")

    xs = _floats(data, 0)
    series = []
    for stem, mcol, scol in pairs:
        means = _floats(data, mcol)
        stds = _floats(data, scol)
        finite = [(x, m, s) for x, m, s in zip(xs, means, stds)
                  if m == m and s == s]  # drop NaN rows per series
        if finite:
            series.append((stem, finite))
    if not series:
        raise DataFormatError("sweep_curve CSV contains no finite data points")

    all_lo = [m - s for _, rows in series for _, m, s in rows]
    all_hi = [m + s for _, rows in series for _, m, s in rows]
    canvas = _Canvas((min(xs), max(xs)), (min(all_lo), max(all_hi)))
    canvas.axes("hyperparameter value", "metric")
    for i, (stem, rows) in enumerate(series):
        color = SERIES_COLORS[i % len(SERIES_COLORS)]
        sx = [r[0] for r in rows]
        sm = [r[1] for r in rows]
        ss = [r[2] for r in rows]
        _series_band(canvas, sx, [m - s for m, s in zip(sm, ss)],
                     [m + s for m, s in zip(sm, ss)], color)
        if len(rows) == 1:
            # single grid value: a point with an explicit error bar
            xp, yp = canvas.px(sx[0]), canvas.py(sm[0])
            lo, hi = canvas.py(sm[0] - ss[0]), canvas.py(sm[0] + ss[0])
            canvas.add(f'<line x1="{_fmt(xp)}" y1="{_fmt(lo)}" x2="{_fmt(xp)}" '
                       f'y2="{_fmt(hi)}" stroke="{color}" stroke-width="2"/>')
            canvas.add(f'<circle cx="{_fmt(xp)}" cy="{_fmt(yp)}" r="4" fill="{color}"/>')
        else:
            _series_polyline(canvas, sx, sm, color)
    _legend(canvas, [stem for stem, _ in series])
    return canvas.render()


def _marching_squares(grid, xs, ys, level=0.5):
    """0.5-level contour segments on a row-major grid of probabilities.

    Standard 16-case lookup with linear interpolation along cell edges;
    ambiguous saddles (cases 5 and 10) are split by the cell-center mean.
    """

    def interp(pa, va, pb, vb):
        if vb == va:
            t = 0.5
        else:
            t = (level - va) / (vb - va)
        return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

    segments = []
    ny, nx = len(ys), len(xs)
    for j in range(ny - 1):
        for i in range(nx - 1):
            v = [grid[j][i], grid[j][i + 1], grid[j + 1][i + 1], grid[j + 1][i]]
            corners = [(xs[i], ys[j]), (xs[i + 1], ys[j]),
                       (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1])]
            case = sum(1 << c for c in range(4) if v[c] >= level)
            if case in (0, 15):
                continue
            edges = {
                0: interp(corners[0], v[0], corners[1], v[1]),
                1: interp(corners[1], v[1], corners[2], v[2]),
                2: interp(corners[3], v[3], corners[2], v[2]),
                3: interp(corners[0], v[0], corners[3], v[3]),
            }
            table = {
                1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)],
                6: [(0, 2)], 7: [(3, 2)], 8: [(2, 3)], 9: [(0, 2)],
                11: [(1, 2)], 12: [(3, 1)], 13: [(0, 1)], 14: [(3, 0)],
            }
            if case in (5, 10):
                center_hi = (v[0] + v[1] + v[2] + v[3]) / 4 >= level
                if case == 5:
                    segs = [(3, 0), (1, 2)] if center_hi else [(3, 2), (0, 1)]
                else:
                    segs = [(0, 1), (2, 3)] if center_hi else [(3, 0), (1, 2)]
            else:
                segs = table[case]
            for ea, eb in segs:
                segments.append((edges[ea], edges[eb]))
    return segments


def _render_boundary_heatmap(header, data) -> str:
    """Schema: x, y, p rows forming a complete rectangular grid."""
    if header[:3] != ["x", "y", "p"]:
        raise DataFormatError("boundary_heatmap CSV must have columns x, y, p")
    xs_all = _floats(data, 0)
    ys_all = _floats(data, 1)
    ps = _floats(data, 2)
    xs = sorted(set(xs_all))
    ys = sorted(set(ys_all))
    if len(xs) * len(ys) != len(data):
        raise DataFormatError(f"boundary grid is not rectangular: {len(xs)} x values "
                              f"* {len(ys)} y values != {len(data)} rows")
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    grid = [[float("nan")] * len(xs) for _ in ys]
    for x, y, p in zip(xs_all, ys_all, ps):
        grid[yi[y]][xi[x]] = p
    if any(c != c for row in grid for c in row):
        raise DataFormatError("boundary grid has missing (x, y) cells")

    canvas = _Canvas((min(xs), max(xs)), (min(ys), max(ys)))
    # Cell rectangles: each sample point owns a cell of the step size.
    dx = (max(xs) - min(xs)) / max(len(xs) - 1, 1) or 1.0
    dy = (max(ys) - min(ys)) / max(len(ys) - 1, 1) or 1.0
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            p = grid[j][i]
            # blue (p=0) to red (p=1)
            r = int(round(255 * p))
            b = int(round(255 * (1 - p)))
            x0 = canvas.px(x - dx / 2)
            x1 = canvas.px(x + dx / 2)
            y0 = canvas.py(y + dy / 2)
            y1 = canvas.py(y - dy / 2)
            canvas.add(f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" '
                       f'width="{_fmt(x1 - x0)}" height="{_fmt(y1 - y0)}" '
                       f'fill="rgb({r},80,{b})" fill-opacity="0.6" stroke="none"/>')
    for (ax, ay), (bx, by) in _marching_squares(grid, xs, ys):
        canvas.add(f'<line x1="{_fmt(canvas.px(ax))}" y1="{_fmt(canvas.py(ay))}" '
                   f'x2="{_fmt(canvas.px(bx))}" y2="{_fmt(canvas.py(by))}" '
                   f'stroke="black" stroke-width="2"/>')
    canvas.axes("x", "y")
    return canvas.render()


def _render_variance_timeseries(header, data) -> str:
    """Schema: epoch, then one numeric column per series."""
    if header[0] != "epoch":
        raise DataFormatError("variance_timeseries CSV must start with an 'epoch' column")
    if len(header) < 2:
        raise DataFormatError("variance_timeseries CSV needs at least one series column")
    xs = _floats(data, 0)
    series = []
    for col in range(1, len(header)):
        ys = _floats(data, col)
        rows = [(x, y) for x, y in zip(xs, ys) if y == y]
        if rows:
            series.append((header[col], rows))
    if not series:
        raise DataFormatError("variance_timeseries CSV contains no finite data points")
    all_y = [y for _, rows in series for _, y in rows]
    canvas = _Canvas((min(xs), max(xs)), (min(all_y), max(all_y)))
    canvas.axes("epoch", "value")
    for i, (name, rows) in enumerate(series):
        color = SERIES_COLORS[i % len(SERIES_COLORS)]
        _series_polyline(canvas, [r[0] for r in rows], [r[1] for r in rows], color)
    _legend(canvas, [name for name, _ in series])
    return canvas.render()


_RENDERERS = {
    "sweep_curve": _render_sweep_curve,
    "boundary_heatmap": _render_boundary_heatmap,
    "variance_timeseries": _render_variance_timeseries,
}


def emit_svg_plot(csv_path, plot_kind: str, out_path) -> Path:
    """Render one CSV into a self-contained SVG file; returns the output path."""
    if plot_kind not in _RENDERERS:
        raise DataFormatError(f"unknown plot kind {plot_kind!r}; "
                              f"expected one of {', '.join(PLOT_KINDS)}")
    header, data = _read_csv(csv_path)
    svg = _RENDERERS[plot_kind](header, data)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(svg)
    return out_path

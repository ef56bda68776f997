"""Deterministic SVG output for t-SNE maps and similarity scatter plots.

Every data point becomes exactly one ``<circle>``; frames and legend swatches
use ``<rect>``, the diagonal uses ``<line>``. Coordinates are written with
two decimals so repeated renders are byte-identical.
"""

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from ._validation import DataError

PALETTE_12 = (
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (127, 127, 127),
    (188, 189, 34), (23, 190, 207), (174, 199, 232), (255, 187, 120),
)


@dataclass(frozen=True)
class PlotStyle:
    width_px: int = 400
    height_px: int = 400
    point_radius: float = 2.5
    class_palette: tuple = field(default=PALETTE_12)
    train_color: tuple = (220, 30, 30)
    test_color: tuple = (30, 60, 220)
    correct_color: tuple = (30, 60, 220)
    incorrect_color: tuple = (220, 30, 30)
    margin_px: int = 20

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise DataError("plot dimensions must be positive")
        if not self.point_radius > 0 or self.margin_px < 0:
            raise DataError("point_radius must be positive and margin_px non-negative")
        if not self.class_palette:
            raise DataError("class_palette must not be empty")


def _rgb(color):
    return "#{:02x}{:02x}{:02x}".format(*(int(c) for c in color))


def _num(v):
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


@dataclass(frozen=True)
class Transform:
    """Affine map from data coordinates to pixels (y axis flipped)."""

    x0: float
    y0: float
    x_lo: float
    y_lo: float
    scale_x: float
    scale_y: float
    height: float

    def __call__(self, x, y):
        px = self.x0 + (x - self.x_lo) * self.scale_x
        py = self.y0 + self.height - (y - self.y_lo) * self.scale_y
        return px, py


def _fit_transform(lo, hi, x0, y0, width, height, margin):
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    inner_w = max(width - 2 * margin, 1)
    inner_h = max(height - 2 * margin, 1)
    return Transform(
        x0=x0 + margin,
        y0=y0 + margin,
        x_lo=float(lo[0]),
        y_lo=float(lo[1]),
        scale_x=inner_w / float(span[0]),
        scale_y=inner_h / float(span[1]),
        height=inner_h,
    )


def map_transforms(coords, style):
    """The three panel transforms; they differ only by horizontal offset."""
    Y = np.asarray(coords, dtype=np.float64)
    lo, hi = Y.min(axis=0), Y.max(axis=0)
    return [
        _fit_transform(lo, hi, k * style.width_px, 0, style.width_px, style.height_px, style.margin_px)
        for k in range(3)
    ]


def _circle(px, py, r, color):
    return f'<circle cx="{_num(px)}" cy="{_num(py)}" r="{_num(r)}" fill="{_rgb(color)}"/>'


def _header(width, height):
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]


def _text(x, y, s, size=12, anchor="middle"):
    return (
        f'<text x="{_num(x)}" y="{_num(y)}" font-family="sans-serif" font-size="{size}" '
        f'text-anchor="{anchor}">{escape(s)}</text>'
    )


def render_map_panels(coords, labels, splits, style=None):
    """Train-by-class, test-by-class and train/test overlay panels side by side."""
    style = style or PlotStyle()
    Y = np.asarray(coords, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] == 0 or Y.shape[1] != 2:
        raise DataError("render_map_panels needs a non-empty N x 2 coordinate array")
    if not np.all(np.isfinite(Y)):
        raise DataError("coordinates must be finite")
    labels = np.asarray(labels)
    if len(labels) != Y.shape[0] or len(splits) != Y.shape[0]:
        raise DataError("labels and splits must have one entry per coordinate row")
    transforms = map_transforms(Y, style)
    w, h = style.width_px, style.height_px
    palette = style.class_palette
    out = _header(3 * w, h)
    titles = ("train (by class)", "test (by class)", "train vs test")
    for k, (tf, title) in enumerate(zip(transforms, titles)):
        out.append(f'<g id="panel{k + 1}">')
        out.append(
            f'<rect x="{k * w}" y="0" width="{w}" height="{h}" fill="none" stroke="#cccccc"/>'
        )
        out.append(_text(k * w + w / 2, 14, title))
        for i in range(Y.shape[0]):
            if k == 0 and splits[i] != "train":
                continue
            if k == 1 and splits[i] != "test":
                continue
            if k == 2:
                color = style.train_color if splits[i] == "train" else style.test_color
            else:
                color = palette[int(labels[i]) % len(palette)]
            out.append(_circle(*tf(Y[i, 0], Y[i, 1]), style.point_radius, color))
        if k == 2:
            for j, (name, color) in enumerate((("train", style.train_color), ("test", style.test_color))):
                x, y = k * w + w - 70, h - 30 + 14 * j
                out.append(f'<rect x="{x}" y="{y - 8}" width="8" height="8" fill="{_rgb(color)}"/>')
                out.append(_text(x + 12, y, name, size=10, anchor="start"))
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_transform(points, style):
    """Square transform covering [-1, 1]^2 and every point."""
    xs = np.array([p.s_same for p in points] + [-1.0, 1.0])
    ys = np.array([p.s_diff for p in points] + [-1.0, 1.0])
    lo = min(xs.min(), ys.min())
    hi = max(xs.max(), ys.max())
    side = min(style.width_px, style.height_px)
    return _fit_transform(np.array([lo, lo]), np.array([hi, hi]), 0, 0, side, side, style.margin_px), lo, hi


def render_scatter(points, style=None, title="closest same vs closest different"):
    """Closest-same (x) vs closest-different (y) similarity with the y = x line.

    Points below the diagonal are nearest-neighbor correct.
    """
    style = style or PlotStyle()
    if len(points) == 0:
        raise DataError("render_scatter needs at least one point")
    for p in points:
        if not (np.isfinite(p.s_same) and np.isfinite(p.s_diff)):
            raise DataError(f"non-finite similarity for point {p.id!r}")
    tf, lo, hi = scatter_transform(points, style)
    side = min(style.width_px, style.height_px)
    out = _header(side, side)
    m = style.margin_px
    out.append(
        f'<rect x="{m}" y="{m}" width="{side - 2 * m}" height="{side - 2 * m}" '
        'fill="none" stroke="#999999"/>'
    )
    (x1, y1), (x2, y2) = tf(lo, lo), tf(hi, hi)
    out.append(
        f'<line x1="{_num(x1)}" y1="{_num(y1)}" x2="{_num(x2)}" y2="{_num(y2)}" '
        'stroke="#444444" stroke-dasharray="4 3"/>'
    )
    out.append(_text(side / 2, side - 4, "closest same-class similarity", size=10))
    out.append(
        f'<text x="10" y="{_num(side / 2)}" font-family="sans-serif" font-size="10" '
        f'text-anchor="middle" transform="rotate(-90 10 {_num(side / 2)})">'
        "closest different-class similarity</text>"
    )
    out.append(_text(side / 2, 12, title, size=11))
    for p in points:
        color = style.correct_color if p.s_same > p.s_diff else style.incorrect_color
        out.append(_circle(*tf(p.s_same, p.s_diff), style.point_radius, color))
    out.append("</svg>")
    return "\n".join(out) + "\n"

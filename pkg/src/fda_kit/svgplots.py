"""Static SVG renderings of curves and the three outlier-detection plots.

The writer is deliberately self-contained so the output bytes depend only on
the input numbers: repeated runs produce identical files.
"""

from __future__ import annotations

import numpy as np

from .dimred import FpcaModel
from .exploratory import BoxplotStats, MsplotStats, OutliergramStats
from .samples import DiscreteFunctionalSample

_WIDTH, _HEIGHT = 720.0, 480.0
_MARGIN = 52.0
_CURVE_COLORS = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
_OUTLIER_COLOR = "#d62728"


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class _Canvas:
    """Data-space drawing surface with a fixed margin layout."""

    def __init__(self, x_range, y_range, title: str, x_label: str, y_label: str):
        self.x0, self.x1 = float(x_range[0]), float(x_range[1])
        self.y0, self.y1 = float(y_range[0]), float(y_range[1])
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        pad = 0.05 * (self.y1 - self.y0)
        self.y0 -= pad
        self.y1 += pad
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(_WIDTH)}" '
            f'height="{_fmt(_HEIGHT)}" viewBox="0 0 {_fmt(_WIDTH)} {_fmt(_HEIGHT)}">',
            f'<rect width="{_fmt(_WIDTH)}" height="{_fmt(_HEIGHT)}" fill="white"/>',
            f'<text x="{_fmt(_WIDTH / 2)}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>',
        ]
        self._axes(x_label, y_label)

    def _sx(self, x: float) -> float:
        return _MARGIN + (x - self.x0) / (self.x1 - self.x0) * (_WIDTH - 2 * _MARGIN)

    def _sy(self, y: float) -> float:
        return _HEIGHT - _MARGIN - (y - self.y0) / (self.y1 - self.y0) * (
            _HEIGHT - 2 * _MARGIN
        )

    def _axes(self, x_label: str, y_label: str) -> None:
        left, right = _MARGIN, _WIDTH - _MARGIN
        top, bottom = _MARGIN, _HEIGHT - _MARGIN
        self.parts.append(
            f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(right - left)}" '
            f'height="{_fmt(bottom - top)}" fill="none" stroke="#333" stroke-width="1"/>'
        )
        labels = [
            (left, bottom + 16, "start", _fmt(self.x0)),
            (right, bottom + 16, "end", _fmt(self.x1)),
            (left - 6, bottom, "end", _fmt(self.y0)),
            (left - 6, top + 10, "end", _fmt(self.y1)),
        ]
        for x, y, anchor, text in labels:
            self.parts.append(
                f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" '
                f'font-family="sans-serif" font-size="11">{text}</text>'
            )
        self.parts.append(
            f'<text x="{_fmt((left + right) / 2)}" y="{_fmt(_HEIGHT - 12)}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">{x_label}</text>'
        )
        self.parts.append(
            f'<text x="16" y="{_fmt((top + bottom) / 2)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {_fmt((top + bottom) / 2)})">{y_label}</text>'
        )

    def _coords(self, xs, ys) -> str:
        return " ".join(
            f"{_fmt(self._sx(float(x)))},{_fmt(self._sy(float(y)))}"
            for x, y in zip(xs, ys)
        )

    def polyline(self, xs, ys, color: str, width: float = 1.2, dash: str = "",
                 opacity: float = 1.0, css_class: str = "") -> None:
        attrs = f' stroke-dasharray="{dash}"' if dash else ""
        cls = f' class="{css_class}"' if css_class else ""
        self.parts.append(
            f'<polyline{cls} points="{self._coords(xs, ys)}" fill="none" '
            f'stroke="{color}" stroke-width="{_fmt(width)}" '
            f'stroke-opacity="{_fmt(opacity)}"{attrs}/>'
        )

    def band(self, xs, lower, upper, color: str, opacity: float = 0.25) -> None:
        pts = self._coords(
            np.concatenate([xs, xs[::-1]]), np.concatenate([lower, upper[::-1]])
        )
        self.parts.append(
            f'<polygon points="{pts}" fill="{color}" fill-opacity="{_fmt(opacity)}" '
            f'stroke="none"/>'
        )

    def dot(self, x: float, y: float, color: str, radius: float = 3.5,
            css_class: str = "") -> None:
        cls = f' class="{css_class}"' if css_class else ""
        self.parts.append(
            f'<circle{cls} cx="{_fmt(self._sx(x))}" cy="{_fmt(self._sy(y))}" '
            f'r="{_fmt(radius)}" fill="{color}"/>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _curve_color(i: int, flagged: bool) -> str:
    return _OUTLIER_COLOR if flagged else _CURVE_COLORS[i % len(_CURVE_COLORS)]


def plot_curves(
    sample: DiscreteFunctionalSample,
    outlier_flags: np.ndarray | None = None,
    title: str | None = None,
) -> str:
    pts = sample.grid.points
    canvas = _Canvas(
        (pts[0], pts[-1]),
        (sample.values.min(), sample.values.max()),
        title if title is not None else (sample.name or "curves"),
        sample.argument_name,
        sample.coordinate_name,
    )
    flags = np.zeros(sample.n_samples, dtype=bool) if outlier_flags is None else outlier_flags
    for i in range(sample.n_samples):
        canvas.polyline(
            pts, sample.values[i], _curve_color(i, bool(flags[i])),
            dash="4 3" if flags[i] else "", css_class=f"curve-{i}",
        )
    return canvas.render()


def plot_boxplot(sample: DiscreteFunctionalSample, stats: BoxplotStats) -> str:
    pts = sample.grid.points
    lo = min(stats.fence_lower.min(), sample.values.min())
    hi = max(stats.fence_upper.max(), sample.values.max())
    canvas = _Canvas(
        (pts[0], pts[-1]), (lo, hi),
        sample.name or "functional boxplot",
        sample.argument_name, sample.coordinate_name,
    )
    for prob, lower, upper in sorted(stats.prob_envelopes, reverse=True):
        canvas.band(pts, lower, upper, "#e377c2", opacity=0.18)
    canvas.band(pts, stats.central_lower, stats.central_upper, "#e377c2", opacity=0.35)
    canvas.polyline(pts, stats.fence_lower, "#1f77b4", dash="6 4", css_class="fence-lower")
    canvas.polyline(pts, stats.fence_upper, "#1f77b4", dash="6 4", css_class="fence-upper")
    canvas.polyline(pts, stats.non_outlying_lower, "#1f77b4", css_class="envelope-lower")
    canvas.polyline(pts, stats.non_outlying_upper, "#1f77b4", css_class="envelope-upper")
    for i in np.nonzero(stats.outlier_flags)[0]:
        canvas.polyline(pts, sample.values[i], _OUTLIER_COLOR, dash="4 3",
                        css_class=f"outlier-{i}")
    canvas.polyline(pts, sample.values[stats.median_index], "#000000", width=2.0,
                    css_class="median")
    return canvas.render()


def ellipse_polyline(stats: MsplotStats, n: int = 101) -> tuple[np.ndarray, np.ndarray]:
    """Points tracing the robust cutoff ellipse of an MS-plot."""
    theta = np.linspace(0.0, 2.0 * np.pi, n)
    chol = np.linalg.cholesky(stats.scatter)
    circle = np.sqrt(stats.cutoff) * np.stack([np.cos(theta), np.sin(theta)])
    xy = stats.center[:, None] + chol @ circle
    return xy[0], xy[1]


def plot_msplot(stats: MsplotStats, title: str = "magnitude-shape plot") -> str:
    ex, ey = ellipse_polyline(stats)
    canvas = _Canvas(
        (min(stats.mo.min(), ex.min()), max(stats.mo.max(), ex.max())),
        (min(stats.vo.min(), ey.min()), max(stats.vo.max(), ey.max())),
        title, "MO", "VO",
    )
    canvas.polyline(ex, ey, "#1f77b4", css_class="cutoff-ellipse")
    for i, (x, y) in enumerate(zip(stats.mo, stats.vo)):
        canvas.dot(float(x), float(y), _curve_color(i, bool(stats.outlier_flags[i])),
                   css_class=f"point-{i}")
    return canvas.render()


def parabola_polyline(stats: OutliergramStats, n: int = 101) -> tuple[np.ndarray, np.ndarray]:
    """Points tracing the non-crossing reference parabola of an outliergram."""
    a0, a1, a2 = stats.parabola
    x = np.linspace(0.0, 1.0, n)
    return x, a0 + a1 * x + a2 * x**2


def plot_outliergram(stats: OutliergramStats, title: str = "outliergram") -> str:
    px, py = parabola_polyline(stats)
    canvas = _Canvas(
        (0.0, 1.0),
        (min(stats.mbd.min(), float(py.min())), max(stats.mbd.max(), float(py.max()))),
        title, "MEI", "MBD",
    )
    canvas.polyline(px, py, "#1f77b4", css_class="parabola")
    for i, (x, y) in enumerate(zip(stats.mei, stats.mbd)):
        canvas.dot(float(x), float(y), _curve_color(i, bool(stats.outlier_flags[i])),
                   css_class=f"point-{i}")
    return canvas.render()


def plot_fpca_perturbation(model: FpcaModel, multiple: float | None = None) -> str:
    """Mean curve with mean +/- c * first component (the perturbation plot)."""
    pts = model.grid.points
    c = float(np.sqrt(model.eigenvalues[0])) if multiple is None else float(multiple)
    plus = model.mean + c * model.components[0]
    minus = model.mean - c * model.components[0]
    lo = min(model.mean.min(), plus.min(), minus.min())
    hi = max(model.mean.max(), plus.max(), minus.max())
    canvas = _Canvas((pts[0], pts[-1]), (lo, hi), "mean +/- component 1", "t", "x(t)")
    canvas.polyline(pts, plus, "#2ca02c", dash="5 3", css_class="plus")
    canvas.polyline(pts, minus, "#d62728", dash="5 3", css_class="minus")
    canvas.polyline(pts, model.mean, "#1f77b4", width=2.0, css_class="mean")
    return canvas.render()

"""Discretized functional samples on a shared grid.

A sample holds ``n`` real-valued curves measured at the same strictly
increasing grid of ``M`` points.  Values between grid points are obtained by
interpolation, values outside the domain by the sample's extrapolation
strategy.  All containers are immutable after construction; operations return
new objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from .errors import (
    BasisMismatch,
    GridMismatch,
    InsufficientPoints,
    NonFiniteValue,
    NonIncreasingGrid,
    OutsideDomain,
    ShapeMismatch,
)


def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=float))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Grid:
    """Strictly increasing discretization points plus the closed domain [a, b].

    The domain defaults to the grid span and may not be smaller than it.
    """

    points: np.ndarray
    domain_range: tuple[float, float] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        pts = _as_readonly(np.atleast_1d(self.points))
        if pts.ndim != 1 or pts.size < 2:
            raise NonIncreasingGrid("grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise NonFiniteValue("grid points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise NonIncreasingGrid("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)
        rng = self.domain_range
        if rng is None:
            rng = (float(pts[0]), float(pts[-1]))
        a, b = float(rng[0]), float(rng[1])
        if a > pts[0] or b < pts[-1]:
            raise NonIncreasingGrid(
                f"domain [{a}, {b}] must contain the grid span "
                f"[{pts[0]}, {pts[-1]}]"
            )
        object.__setattr__(self, "domain_range", (a, b))

    @property
    def n_points(self) -> int:
        return self.points.size

    @property
    def span(self) -> float:
        return float(self.points[-1] - self.points[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            np.array_equal(self.points, other.points)
            and self.domain_range == other.domain_range
        )

    def __hash__(self) -> int:
        return hash((self.points.tobytes(), self.domain_range))


@dataclass(frozen=True)
class InterpolationSpec:
    """Within-grid evaluation rule: piecewise linear or an order-k spline."""

    kind: Literal["linear", "spline"] = "linear"
    order: int = 3

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "spline"):
            raise ValueError(f"unknown interpolation kind {self.kind!r}")
        if self.kind == "spline" and not 2 <= self.order <= 5:
            raise ValueError("spline interpolation order must be in 2..5")


@dataclass(frozen=True)
class ExtrapolationSpec:
    """Out-of-domain evaluation rule.

    ``boundary`` clamps to the nearest domain endpoint, ``value`` returns a
    fixed constant, ``periodic`` wraps queries by the domain length,
    ``error`` refuses out-of-domain queries, and ``basis`` extends the basis
    expansion itself (basis samples only).
    """

    kind: Literal["boundary", "value", "periodic", "error", "basis"] = "boundary"
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("boundary", "value", "periodic", "error", "basis"):
            raise ValueError(f"unknown extrapolation kind {self.kind!r}")


@dataclass(frozen=True)
class DiscreteFunctionalSample:
    """``n`` curves sampled on a common grid, with evaluation semantics."""

    grid: Grid
    values: np.ndarray
    name: str = ""
    argument_name: str = "t"
    coordinate_name: str = "x(t)"
    interpolation: InterpolationSpec = field(default_factory=InterpolationSpec)
    extrapolation: ExtrapolationSpec = field(default_factory=ExtrapolationSpec)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[np.newaxis, :]
        if vals.ndim != 2 or vals.shape[0] < 1:
            raise ShapeMismatch("values must be an n-by-M matrix with n >= 1")
        if vals.shape[1] != self.grid.n_points:
            raise ShapeMismatch(
                f"value rows have length {vals.shape[1]}, grid has "
                f"{self.grid.n_points} points"
            )
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValue("sample values must be finite")
        if self.extrapolation.kind == "basis":
            raise ValueError("basis extension extrapolation needs a basis sample")
        object.__setattr__(self, "values", _as_readonly(vals))

    @property
    def n_samples(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_points(self) -> int:
        return self.grid.n_points

    @property
    def domain_range(self) -> tuple[float, float]:
        return self.grid.domain_range

    def row(self, i: int) -> "DiscreteFunctionalSample":
        """Single-curve view of curve ``i`` (metadata preserved)."""
        return replace(self, values=self.values[i : i + 1])

    # -- evaluation ----------------------------------------------------------

    def evaluate(
        self,
        query_points: float | Sequence[float] | np.ndarray,
        extrapolation: ExtrapolationSpec | None = None,
    ) -> np.ndarray:
        """Values of every curve at ``query_points`` as an (n, m) matrix.

        Queries that coincide with grid points return the stored values
        bit-exactly, whatever the interpolation spec.  Out-of-domain queries
        follow the extrapolation spec (the sample's own unless overridden).
        """
        extra = extrapolation if extrapolation is not None else self.extrapolation
        if extra.kind == "basis":
            raise ValueError("basis extension extrapolation needs a basis sample")
        q = np.atleast_1d(np.asarray(query_points, dtype=float))
        if q.ndim != 1:
            raise ShapeMismatch("query points must be a 1-D sequence")
        if not np.all(np.isfinite(q)):
            raise NonFiniteValue("query points must be finite")

        a, b = self.domain_range
        below = q < a
        above = q > b
        outside = below | above
        if extra.kind == "error" and np.any(outside):
            bad = q[outside][0]
            raise OutsideDomain(f"query point {bad} outside domain [{a}, {b}]")

        eff = q.copy()
        if extra.kind == "boundary":
            eff = np.clip(eff, a, b)
        elif extra.kind == "periodic":
            period = b - a
            folded = a + np.fmod(eff[outside] - a, period)
            folded[folded < a] += period
            eff[outside] = folded

        out = self._interpolate(eff)

        if extra.kind == "value" and np.any(outside):
            out[:, outside] = extra.value
        return out

    def _interpolate(self, q: np.ndarray) -> np.ndarray:
        pts = self.grid.points
        if self.interpolation.kind == "linear":
            idx = np.clip(np.searchsorted(pts, q, side="right"), 1, pts.size - 1)
            t0 = pts[idx - 1]
            t1 = pts[idx]
            w = (q - t0) / (t1 - t0)
            out = self.values[:, idx - 1] * (1.0 - w) + self.values[:, idx] * w
        else:
            k = self.interpolation.order
            if pts.size <= k:
                raise InsufficientPoints(
                    f"spline interpolation of order {k} needs more than {k} points"
                )
            spline = make_interp_spline(pts, self.values, k=k, axis=1)
            out = np.asarray(spline(q), dtype=float)

        # Stored values win bit-exactly wherever a query hits a grid point.
        hit = np.searchsorted(pts, q)
        on_grid = (hit < pts.size) & (pts[np.minimum(hit, pts.size - 1)] == q)
        if np.any(on_grid):
            out[:, on_grid] = self.values[:, hit[on_grid]]
        return out

    # -- calculus ------------------------------------------------------------

    def derivative(self, order: int = 1) -> "DiscreteFunctionalSample":
        """Finite-difference derivative, applied ``order`` times.

        Interior points use central differences on the (possibly irregular)
        grid; the endpoints use one-sided second-order stencils.
        """
        if order < 1:
            raise ValueError("derivative order must be >= 1")
        if self.n_points < order + 1:
            raise InsufficientPoints(
                f"derivative of order {order} needs at least {order + 1} points"
            )
        vals = self.values
        for _ in range(order):
            vals = finite_difference_derivative(vals, self.grid.points)
        return replace(self, values=vals)


def build_discrete_sample(
    points: Sequence[float] | np.ndarray,
    values: Sequence[Sequence[float]] | np.ndarray,
    *,
    domain_range: tuple[float, float] | None = None,
    name: str = "",
    argument_name: str = "t",
    coordinate_name: str = "x(t)",
    interpolation: InterpolationSpec | None = None,
    extrapolation: ExtrapolationSpec | None = None,
) -> DiscreteFunctionalSample:
    """Assemble a discretized sample with validated defaults."""
    return DiscreteFunctionalSample(
        grid=Grid(np.asarray(points, dtype=float), domain_range),
        values=np.asarray(values, dtype=float),
        name=name,
        argument_name=argument_name,
        coordinate_name=coordinate_name,
        interpolation=interpolation or InterpolationSpec(),
        extrapolation=extrapolation or ExtrapolationSpec(),
    )


# -- grid utilities ------------------------------------------------------------


def finite_difference_derivative(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Second-order finite differences along axis 1, irregular grids allowed.

    Written in difference form so exactly constant rows differentiate to
    exactly zero; interior stencils are exact for quadratics, endpoint
    stencils are the one-sided second-order ones.
    """
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    pts = np.asarray(points, dtype=float)
    h = np.diff(pts)
    df = np.diff(vals, axis=1)
    out = np.empty_like(vals)
    if pts.size == 2:
        out[:, 0] = out[:, 1] = df[:, 0] / h[0]
        return out
    h1, h2 = h[:-1], h[1:]
    out[:, 1:-1] = (h1**2 * df[:, 1:] + h2**2 * df[:, :-1]) / (h1 * h2 * (h1 + h2))
    a, b = h[0], h[1]
    out[:, 0] = (2 * a + b) * df[:, 0] / (a * (a + b)) - a * df[:, 1] / (b * (a + b))
    a, b = h[-1], h[-2]
    out[:, -1] = (2 * a + b) * df[:, -1] / (a * (a + b)) - a * df[:, -2] / (b * (a + b))
    return out


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Quadrature weights w with sum(w * f) = trapezoid integral of f."""
    pts = np.asarray(points, dtype=float)
    w = np.empty_like(pts)
    w[0] = (pts[1] - pts[0]) / 2.0
    w[-1] = (pts[-1] - pts[-2]) / 2.0
    w[1:-1] = (pts[2:] - pts[:-2]) / 2.0
    return w


def refine_grid(points: np.ndarray, factor: int = 10) -> np.ndarray:
    """Subdivide every grid interval into ``factor`` equal parts."""
    pts = np.asarray(points, dtype=float)
    steps = np.arange(factor) / factor
    fine = (pts[:-1, None] + steps[None, :] * np.diff(pts)[:, None]).ravel()
    return np.append(fine, pts[-1])


# -- pointwise algebra and L2 geometry ----------------------------------------


def _require_same_grid(f: DiscreteFunctionalSample, g: DiscreteFunctionalSample) -> None:
    if f.grid != g.grid:
        raise GridMismatch("samples live on different grids; resample explicitly")


def linear_combine(a: float, f, b: float, g):
    """Pointwise (or coefficient-wise) combination ``a*f + b*g``.

    Both samples must share the grid, or share the basis; mixed or mismatched
    representations are refused rather than silently resampled.
    """
    from .basis import BasisFunctionalSample  # local to avoid an import cycle

    if isinstance(f, DiscreteFunctionalSample) and isinstance(g, DiscreteFunctionalSample):
        _require_same_grid(f, g)
        if f.values.shape != g.values.shape:
            raise ShapeMismatch("samples have different numbers of curves")
        return replace(f, values=a * f.values + b * g.values)
    if isinstance(f, BasisFunctionalSample) and isinstance(g, BasisFunctionalSample):
        if f.basis != g.basis:
            raise BasisMismatch("samples use different bases")
        if f.coefficients.shape != g.coefficients.shape:
            raise ShapeMismatch("samples have different numbers of curves")
        return replace(f, coefficients=a * f.coefficients + b * g.coefficients)
    raise BasisMismatch("cannot combine a grid sample with a basis sample")


def inner_product_l2(
    f: DiscreteFunctionalSample, g: DiscreteFunctionalSample
) -> float | np.ndarray:
    """Trapezoidal L2 inner product over the domain, row by row.

    Returns a scalar for single-curve samples and a length-n vector when both
    samples hold ``n`` curves.  Basis samples are converted with ``to_grid``
    by the caller; implicit resampling is refused.
    """
    if not isinstance(f, DiscreteFunctionalSample) or not isinstance(
        g, DiscreteFunctionalSample
    ):
        raise BasisMismatch("inner products act on grid samples; use to_grid first")
    _require_same_grid(f, g)
    if f.n_samples != g.n_samples:
        raise ShapeMismatch("samples have different numbers of curves")
    w = trapezoid_weights(f.grid.points)
    prods = (f.values * g.values) @ w
    return float(prods[0]) if prods.size == 1 else prods


def norm_l2(f: DiscreteFunctionalSample) -> float | np.ndarray:
    """Quadrature L2 norm per curve; scalar for a single curve."""
    return np.sqrt(inner_product_l2(f, f))

"""Basis expansions: constant, monomial, B-spline, and Fourier bases.

A basis sample stores one coefficient row per curve; evaluation multiplies
coefficients with the design matrix of basis functions.  Derivatives are
exact: monomials shift-and-scale, Fourier elements rotate within the span,
and B-splines follow the knot-difference recursion with the order reduced
by one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .errors import NonFiniteValue, NonIncreasingGrid, OutsideDomain, ShapeMismatch
from .samples import (
    DiscreteFunctionalSample,
    ExtrapolationSpec,
    Grid,
    _as_readonly,
)


@dataclass(frozen=True)
class LinearDifferentialOperatorSpec:
    """Constant-coefficient operator L = sum_k weights[k] * D^k."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        w = tuple(float(x) for x in self.weights)
        if len(w) == 0 or not any(x != 0.0 for x in w):
            raise ValueError("operator needs at least one nonzero weight")
        if not all(math.isfinite(x) for x in w):
            raise NonFiniteValue("operator weights must be finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def derivative(cls, order: int) -> "LinearDifferentialOperatorSpec":
        """The plain k-th derivative operator D^order."""
        if order < 0:
            raise ValueError("derivative order must be >= 0")
        return cls(weights=(0.0,) * order + (1.0,))


@dataclass(frozen=True)
class BasisSpec:
    """Description of one of the four supported function bases."""

    kind: Literal["constant", "monomial", "bspline", "fourier"]
    n_basis: int
    domain_range: tuple[float, float] = (0.0, 1.0)
    order: int = 4
    knots: tuple[float, ...] | None = None
    period: float | None = None

    def __post_init__(self) -> None:
        a, b = float(self.domain_range[0]), float(self.domain_range[1])
        if not (math.isfinite(a) and math.isfinite(b)) or a >= b:
            raise ValueError("domain must be a finite interval [a, b] with a < b")
        object.__setattr__(self, "domain_range", (a, b))
        if self.n_basis < 1:
            raise ValueError("n_basis must be positive")
        if self.kind == "constant":
            if self.n_basis != 1:
                raise ValueError("the constant basis has exactly one element")
        elif self.kind == "bspline":
            if self.order < 1:
                raise ValueError("B-spline order must be >= 1")
            if self.n_basis < self.order:
                raise ValueError("B-spline basis needs n_basis >= order")
            knots = self.knots
            if knots is None:
                knots = tuple(np.linspace(a, b, self.n_basis - self.order + 2))
            else:
                knots = tuple(float(k) for k in knots)
            if len(knots) != self.n_basis - self.order + 2:
                raise ValueError(
                    "B-spline knot count must equal n_basis - order + 2"
                )
            if knots[0] != a or knots[-1] != b:
                raise ValueError("B-spline knots must span the domain exactly")
            if any(k1 <= k0 for k0, k1 in zip(knots, knots[1:])):
                raise NonIncreasingGrid("B-spline knots must be strictly increasing")
            object.__setattr__(self, "knots", knots)
        elif self.kind == "fourier":
            period = b - a if self.period is None else float(self.period)
            if period <= 0:
                raise ValueError("Fourier period must be positive")
            object.__setattr__(self, "period", period)
        elif self.kind != "monomial":
            raise ValueError(f"unknown basis kind {self.kind!r}")

    def full_knots(self) -> np.ndarray:
        """Clamped knot vector (endpoints repeated ``order`` times)."""
        assert self.kind == "bspline" and self.knots is not None
        inner = np.asarray(self.knots, dtype=float)
        return np.concatenate(
            [np.full(self.order - 1, inner[0]), inner, np.full(self.order - 1, inner[-1])]
        )


# -- design matrices -----------------------------------------------------------


def _monomial_design(n_basis: int, q: np.ndarray, deriv: int) -> np.ndarray:
    design = np.zeros((n_basis, q.size))
    for k in range(deriv, n_basis):
        coef = math.perm(k, deriv)
        design[k] = coef * q ** (k - deriv)
    return design


def _fourier_design(spec: BasisSpec, q: np.ndarray, deriv: int) -> np.ndarray:
    a, _ = spec.domain_range
    period = float(spec.period)  # type: ignore[arg-type]
    omega = 2.0 * math.pi / period
    design = np.zeros((spec.n_basis, q.size))
    if deriv == 0:
        design[0] = 1.0 / math.sqrt(period)
    scale = math.sqrt(2.0 / period)
    phase = deriv * math.pi / 2.0
    for row in range(1, spec.n_basis):
        k = (row + 1) // 2
        arg = k * omega * (q - a)
        amp = scale * (k * omega) ** deriv
        if row % 2 == 1:  # sine element
            design[row] = amp * np.sin(arg + phase)
        else:  # cosine element
            design[row] = amp * np.cos(arg + phase)
    return design


def _bspline_basis_at(
    full_knots: np.ndarray, order: int, q: np.ndarray
) -> np.ndarray:
    """Cox-de Boor evaluation inside the clamped span; zero outside."""
    p = order - 1
    n_basis = full_knots.size - order
    a, b = full_knots[p], full_knots[n_basis]
    design = np.zeros((n_basis, q.size))
    inside = (q >= a) & (q <= b)
    if not np.any(inside):
        return design
    t = q[inside]
    span = np.clip(
        np.searchsorted(full_knots, t, side="right") - 1, p, n_basis - 1
    )
    m = t.size
    funs = np.zeros((m, p + 1))
    funs[:, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = t - full_knots[span + 1 - j]
        right[:, j] = full_knots[span + j] - t
        saved = np.zeros(m)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = funs[:, r] / denom
            funs[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        funs[:, j] = saved
    cols = np.nonzero(inside)[0]
    for r in range(p + 1):
        design[span - p + r, cols] = funs[:, r]
    return design


def _bspline_reduce(
    full_knots: np.ndarray, order: int
) -> tuple[np.ndarray, np.ndarray, int]:
    """Coefficient map of differentiation: spline(order) -> spline(order-1)."""
    n_basis = full_knots.size - order
    dmat = np.zeros((n_basis - 1, n_basis))
    for i in range(n_basis - 1):
        denom = full_knots[i + order] - full_knots[i + 1]
        dmat[i, i] = -(order - 1) / denom
        dmat[i, i + 1] = (order - 1) / denom
    return dmat, full_knots[1:-1], order - 1


def _bspline_design(spec: BasisSpec, q: np.ndarray, deriv: int) -> np.ndarray:
    full = spec.full_knots()
    order = spec.order
    if deriv >= order:
        return np.zeros((spec.n_basis, q.size))
    chain = np.eye(spec.n_basis)
    for _ in range(deriv):
        dmat, full, order = _bspline_reduce(full, order)
        chain = dmat @ chain
    reduced = _bspline_basis_at(full, order, q)
    design = chain.T @ reduced

    # Polynomial extension beyond [a, b]: Taylor expansion at the boundary is
    # exact because the end segments are polynomials of degree order-1.
    a, b = spec.domain_range
    for mask, bound in ((q < a, a), (q > b, b)):
        if not np.any(mask):
            continue
        dt = q[mask] - bound
        ext = np.zeros((spec.n_basis, dt.size))
        for d in range(order - deriv):
            at_bound = _bspline_design(spec, np.array([bound]), deriv + d)[:, 0]
            ext += np.outer(at_bound, dt**d / math.factorial(d))
        design[:, mask] = ext
    return design


def evaluate_basis(
    basis: BasisSpec, query_points: Sequence[float] | np.ndarray, derivative: int = 0
) -> np.ndarray:
    """Design matrix (n_basis, m) of basis-function values or derivatives.

    Monomial and Fourier elements follow their global formulas everywhere;
    B-splines extend the boundary polynomial pieces beyond the domain.
    """
    q = np.atleast_1d(np.asarray(query_points, dtype=float))
    if not np.all(np.isfinite(q)):
        raise NonFiniteValue("query points must be finite")
    if derivative < 0:
        raise ValueError("derivative order must be >= 0")
    if basis.kind == "constant":
        if derivative == 0:
            return np.ones((1, q.size))
        return np.zeros((1, q.size))
    if basis.kind == "monomial":
        return _monomial_design(basis.n_basis, q, derivative)
    if basis.kind == "fourier":
        return _fourier_design(basis, q, derivative)
    return _bspline_design(basis, q, derivative)


# -- basis samples ---------------------------------------------------------------


@dataclass(frozen=True)
class BasisFunctionalSample:
    """``n`` curves stored as coefficient rows over a shared basis."""

    basis: BasisSpec
    coefficients: np.ndarray
    name: str = ""
    argument_name: str = "t"
    coordinate_name: str = "x(t)"
    extrapolation: ExtrapolationSpec = field(
        default_factory=lambda: ExtrapolationSpec("basis")
    )

    def __post_init__(self) -> None:
        coefs = np.asarray(self.coefficients, dtype=float)
        if coefs.ndim == 1:
            coefs = coefs[np.newaxis, :]
        if coefs.ndim != 2 or coefs.shape[0] < 1:
            raise ShapeMismatch("coefficients must be an n-by-K matrix with n >= 1")
        if coefs.shape[1] != self.basis.n_basis:
            raise ShapeMismatch(
                f"coefficient rows have length {coefs.shape[1]}, basis has "
                f"{self.basis.n_basis} elements"
            )
        if not np.all(np.isfinite(coefs)):
            raise NonFiniteValue("coefficients must be finite")
        object.__setattr__(self, "coefficients", _as_readonly(coefs))

    @property
    def n_samples(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def domain_range(self) -> tuple[float, float]:
        return self.basis.domain_range

    def row(self, i: int) -> "BasisFunctionalSample":
        return replace(self, coefficients=self.coefficients[i : i + 1])

    def evaluate(
        self,
        query_points: float | Sequence[float] | np.ndarray,
        extrapolation: ExtrapolationSpec | None = None,
    ) -> np.ndarray:
        extra = extrapolation if extrapolation is not None else self.extrapolation
        q = np.atleast_1d(np.asarray(query_points, dtype=float))
        if not np.all(np.isfinite(q)):
            raise NonFiniteValue("query points must be finite")
        a, b = self.domain_range
        below = q < a
        above = q > b
        outside = below | above
        if extra.kind == "error" and np.any(outside):
            raise OutsideDomain(
                f"query point {q[outside][0]} outside domain [{a}, {b}]"
            )
        eff = q.copy()
        if extra.kind == "boundary":
            eff = np.clip(eff, a, b)
        elif extra.kind == "periodic":
            period = b - a
            folded = a + np.fmod(eff[outside] - a, period)
            folded[folded < a] += period
            eff[outside] = folded
        out = self.coefficients @ evaluate_basis(self.basis, eff)
        if extra.kind == "value" and np.any(outside):
            out[:, outside] = extra.value
        return out

    def derivative(self, order: int = 1) -> "BasisFunctionalSample":
        """Exact derivative within the basis family.

        Monomial: K drops by one per order.  B-spline: the order drops by one.
        Fourier: elements rotate in place; an even-sized basis is widened to
        K+1 so the rotated span closes.
        """
        if order < 1:
            raise ValueError("derivative order must be >= 1")
        out = self
        for _ in range(order):
            out = out._derivative_once()
        return out

    def _derivative_once(self) -> "BasisFunctionalSample":
        basis, coefs = self.basis, self.coefficients
        if basis.kind == "constant":
            return replace(self, coefficients=np.zeros_like(coefs))
        if basis.kind == "monomial":
            if basis.n_basis == 1:
                return replace(self, coefficients=np.zeros_like(coefs))
            scale = np.arange(1, basis.n_basis)
            new = coefs[:, 1:] * scale
            new_basis = replace(basis, n_basis=basis.n_basis - 1)
            return replace(self, basis=new_basis, coefficients=new)
        if basis.kind == "fourier":
            k_out = basis.n_basis if basis.n_basis % 2 == 1 else basis.n_basis + 1
            wide = np.zeros((coefs.shape[0], k_out))
            omega = 2.0 * math.pi / float(basis.period)  # type: ignore[arg-type]
            for row in range(1, basis.n_basis):
                k = (row + 1) // 2
                if row % 2 == 1:  # sin_k -> k*omega*cos_k
                    wide[:, row + 1] += k * omega * coefs[:, row]
                else:  # cos_k -> -k*omega*sin_k
                    wide[:, row - 1] += -k * omega * coefs[:, row]
            new_basis = replace(basis, n_basis=k_out)
            return replace(self, basis=new_basis, coefficients=wide)
        # B-spline: knot-difference recursion, order reduced by one.
        if basis.order == 1:
            return replace(self, coefficients=np.zeros_like(coefs))
        dmat, _, new_order = _bspline_reduce(basis.full_knots(), basis.order)
        new_basis = replace(
            basis, n_basis=basis.n_basis - 1, order=new_order, knots=basis.knots
        )
        return replace(self, basis=new_basis, coefficients=coefs @ dmat.T)


def to_grid(
    sample: BasisFunctionalSample,
    points: Sequence[float] | np.ndarray | None = None,
) -> DiscreteFunctionalSample:
    """Synthesize a basis sample on a grid (101 uniform points by default)."""
    a, b = sample.domain_range
    pts = np.linspace(a, b, 101) if points is None else np.asarray(points, dtype=float)
    values = sample.evaluate(pts)
    return DiscreteFunctionalSample(
        grid=Grid(pts, (min(a, float(pts[0])), max(b, float(pts[-1])))),
        values=values,
        name=sample.name,
        argument_name=sample.argument_name,
        coordinate_name=sample.coordinate_name,
    )

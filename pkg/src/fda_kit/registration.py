"""Curve alignment: shifts, landmark warps, and SRVF elastic registration.

Shift registration translates curves; landmark methods pin known feature
locations; elastic registration aligns square-root velocity functions with a
dynamic program over monotone grid paths and, without a template, iterates
toward a Karcher-mean template.  Warped curves are always re-evaluated on the
original grid, with out-of-interval values supplied by extrapolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator

from .errors import GridMismatch, NonMonotoneLandmarks, ShapeMismatch
from .samples import (
    DiscreteFunctionalSample,
    ExtrapolationSpec,
    finite_difference_derivative,
    trapezoid_weights,
)

#: SRVF samples are ordinary grid samples holding q = x' / sqrt(|x'|).
SrvfSample = DiscreteFunctionalSample

_MIN_WARP_SLOPE = 1e-8
_DP_MAX_STEP = 5  # lattice predecessor window; path slopes stay in [1/5, 5]


@dataclass(frozen=True)
class Shifts:
    """Per-curve time shifts, in domain units."""

    deltas: np.ndarray

    def __post_init__(self) -> None:
        d = np.atleast_1d(np.asarray(self.deltas, dtype=float))
        if not np.all(np.isfinite(d)):
            raise ValueError("shifts must be finite")
        object.__setattr__(self, "deltas", d)


@dataclass(frozen=True)
class Warping:
    """Monotone warping functions gamma_i: [a, b] -> [a, b], one per curve.

    Endpoints are pinned exactly; slopes along the grid are strictly positive.
    """

    functions: DiscreteFunctionalSample

    def __post_init__(self) -> None:
        fns = self.functions
        a, b = fns.domain_range
        pts = fns.grid.points
        if pts[0] != a or pts[-1] != b:
            raise ValueError("warping grid must span the domain exactly")
        vals = fns.values
        if np.any(vals[:, 0] != a) or np.any(vals[:, -1] != b):
            raise ValueError("warpings must pin gamma(a) = a and gamma(b) = b")
        slopes = np.diff(vals, axis=1) / np.diff(pts)
        if np.any(slopes < _MIN_WARP_SLOPE):
            raise ValueError("warpings must be strictly increasing along the grid")
        object.__setattr__(self, "functions", fns)

    @property
    def n_samples(self) -> int:
        return self.functions.n_samples

    def row(self, i: int) -> "Warping":
        return Warping(self.functions.row(i))

    def apply(self, sample: DiscreteFunctionalSample) -> DiscreteFunctionalSample:
        """Compose: row i of the result is x_i(gamma_i(t)) on the original grid."""
        if sample.grid != self.functions.grid:
            raise GridMismatch("warping grid differs from the sample grid")
        if sample.n_samples != self.n_samples and self.n_samples != 1:
            raise ShapeMismatch("one warping per curve (or a single shared one)")
        rows = []
        for i in range(sample.n_samples):
            gamma = self.functions.values[min(i, self.n_samples - 1)]
            rows.append(sample.row(i).evaluate(gamma)[0])
        return replace(sample, values=np.asarray(rows))


def identity_warping(sample: DiscreteFunctionalSample, n: int | None = None) -> Warping:
    pts = sample.grid.points
    count = sample.n_samples if n is None else n
    return Warping(
        replace(
            sample,
            values=np.tile(pts, (count, 1)),
            coordinate_name="gamma(t)",
        )
    )


def _warping_from_rows(
    sample: DiscreteFunctionalSample, rows: np.ndarray
) -> Warping:
    a, b = sample.domain_range
    rows = np.array(rows, dtype=float)
    rows[:, 0] = a
    rows[:, -1] = b
    return Warping(replace(sample, values=rows, coordinate_name="gamma(t)"))


# -- shift registration ------------------------------------------------------------


def landmark_shift_deltas(
    landmarks: Sequence[float] | np.ndarray, target: float | None = None
) -> Shifts:
    """Shifts delta_i = tau_i - tau* moving each landmark onto the target.

    The target defaults to the cross-sample mean of the landmark locations.
    """
    marks = np.atleast_1d(np.asarray(landmarks, dtype=float))
    tau_star = float(np.mean(marks)) if target is None else float(target)
    return Shifts(marks - tau_star)


def shift(
    sample: DiscreteFunctionalSample,
    shifts: Shifts | Sequence[float] | np.ndarray,
    extrapolation: ExtrapolationSpec | None = None,
) -> DiscreteFunctionalSample:
    """Translated curves x_i(t + delta_i), re-evaluated on the original grid."""
    deltas = shifts.deltas if isinstance(shifts, Shifts) else Shifts(shifts).deltas
    if deltas.size != sample.n_samples:
        raise ShapeMismatch("one shift per curve required")
    a, b = sample.domain_range
    if np.any(np.abs(deltas) >= (b - a)):
        raise ValueError("shifts must be smaller than the domain length")
    pts = sample.grid.points
    rows = [
        sample.row(i).evaluate(pts + deltas[i], extrapolation)[0]
        for i in range(sample.n_samples)
    ]
    return replace(sample, values=np.asarray(rows))


@dataclass(frozen=True)
class ShiftRegistrationResult:
    registered: DiscreteFunctionalSample
    shifts: Shifts
    converged: bool
    n_iterations: int
    criterion_trail: tuple[float, ...]


def _golden_section_min(fun, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Deterministic golden-section minimizer on [lo, hi]."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = fun(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = fun(x2)
    return (lo + hi) / 2.0


def least_squares_shift_register(
    sample: DiscreteFunctionalSample,
    template: DiscreteFunctionalSample | None = None,
    max_iter: int = 20,
    tol: float | None = None,
) -> ShiftRegistrationResult:
    """Shift registration minimizing the summed squared distance to the mean.

    Each iteration re-estimates the template as the mean of the currently
    registered curves (unless a fixed template is supplied) and re-optimizes
    every shift by golden-section search over [-(b-a)/4, (b-a)/4].  A shift
    update is kept only when it does not increase that curve's criterion, so
    the total criterion never increases.
    """
    if template is None and sample.n_samples < 2:
        raise ShapeMismatch("mean-template registration needs at least two curves")
    if template is not None and template.n_samples != 1:
        raise ShapeMismatch("the template must be a single curve")
    pts = sample.grid.points
    w = trapezoid_weights(pts)
    a, b = sample.domain_range
    window = (b - a) / 4.0
    n = sample.n_samples
    deltas = np.zeros(n)

    def row_values(i: int, delta: float) -> np.ndarray:
        return sample.row(i).evaluate(pts + delta)[0]

    def criterion(values: np.ndarray, mu: np.ndarray) -> float:
        return float(np.sum(((values - mu) ** 2) @ w))

    registered = sample.values.copy()
    trail: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mu = template.values[0] if template is not None else registered.mean(axis=0)
        for i in range(n):
            def objective(delta: float, i=i, mu=mu) -> float:
                return criterion(row_values(i, delta)[None, :], mu[None, :])

            current = objective(deltas[i])
            candidate = _golden_section_min(objective, -window, window)
            if objective(candidate) <= current:
                deltas[i] = candidate
            registered[i] = row_values(i, deltas[i])
        mu = template.values[0] if template is not None else registered.mean(axis=0)
        regsse = criterion(registered, mu)
        trail.append(regsse)
        if tol is None:
            threshold = 1e-8 * (trail[0] if trail[0] > 0 else 1.0)
        else:
            threshold = tol
        if len(trail) >= 2 and trail[-2] - trail[-1] < threshold:
            converged = True
            break
        if trail[-1] == 0.0:
            converged = True
            break
    return ShiftRegistrationResult(
        registered=replace(sample, values=registered),
        shifts=Shifts(deltas),
        converged=converged,
        n_iterations=iterations,
        criterion_trail=tuple(trail),
    )


# -- landmark elastic registration ---------------------------------------------------


@dataclass(frozen=True)
class ElasticRegistrationResult:
    registered: DiscreteFunctionalSample
    warping: Warping
    converged: bool = True
    n_iterations: int = 1


def landmark_elastic_register(
    sample: DiscreteFunctionalSample,
    landmarks: Sequence[Sequence[float]] | np.ndarray,
    target_landmarks: Sequence[float] | np.ndarray | None = None,
) -> ElasticRegistrationResult:
    """Warp curves so that landmark l sits at the shared location tau*_l.

    Warpings are monotone cubic (Fritsch-Carlson) interpolants through
    (a, a), (tau*_l, tau_il), (b, b).
    """
    marks = np.atleast_2d(np.asarray(landmarks, dtype=float))
    if marks.shape[0] != sample.n_samples:
        raise ShapeMismatch("one landmark row per curve required")
    a, b = sample.domain_range
    if np.any(marks <= a) or np.any(marks >= b):
        raise NonMonotoneLandmarks("landmarks must lie strictly inside the domain")
    if marks.shape[1] > 1 and np.any(np.diff(marks, axis=1) <= 0):
        raise NonMonotoneLandmarks("each landmark row must be strictly increasing")
    targets = (
        marks.mean(axis=0)
        if target_landmarks is None
        else np.atleast_1d(np.asarray(target_landmarks, dtype=float))
    )
    if targets.size != marks.shape[1]:
        raise ShapeMismatch("one target per landmark required")
    if np.any(targets <= a) or np.any(targets >= b) or (
        targets.size > 1 and np.any(np.diff(targets) <= 0)
    ):
        raise NonMonotoneLandmarks("targets must be interior and strictly increasing")

    pts = sample.grid.points
    knots_x = np.concatenate([[a], targets, [b]])
    rows = []
    for i in range(sample.n_samples):
        knots_y = np.concatenate([[a], marks[i], [b]])
        rows.append(PchipInterpolator(knots_x, knots_y)(pts))
    warping = _warping_from_rows(sample, np.asarray(rows))
    return ElasticRegistrationResult(
        registered=warping.apply(sample), warping=warping
    )


# -- SRVF elastic registration ---------------------------------------------------------


def srvf_transform(sample: DiscreteFunctionalSample) -> SrvfSample:
    """Square-root velocity function q = x' / sqrt(|x'|) (zero where x' = 0)."""
    dx = sample.derivative(1).values
    q = np.sign(dx) * np.sqrt(np.abs(dx))
    return replace(sample, values=q, coordinate_name="q(t)")


def srvf_inverse(
    q: SrvfSample, initial_value: float | Sequence[float] | np.ndarray = 0.0
) -> DiscreteFunctionalSample:
    """Curve with the given SRVF: x(t) = x(a) + integral of q|q|."""
    speed = q.values * np.abs(q.values)
    init = np.broadcast_to(
        np.atleast_1d(np.asarray(initial_value, dtype=float)), (q.n_samples,)
    )
    integral = cumulative_trapezoid(speed, q.grid.points, axis=1, initial=0.0)
    return replace(q, values=integral + init[:, None], coordinate_name="x(t)")


def _dp_offsets() -> list[tuple[int, int]]:
    offsets = [
        (di, dj)
        for di in range(1, _DP_MAX_STEP + 1)
        for dj in range(1, _DP_MAX_STEP + 1)
    ]
    # Preference when costs tie: steps closest to the diagonal first, then
    # lexicographic order.
    offsets.sort(key=lambda o: (abs(o[0] - o[1]), o[0], o[1]))
    return offsets


def _segment_costs(
    qm: np.ndarray, qt: np.ndarray, pts: np.ndarray, di: int, dj: int
) -> np.ndarray:
    """cost[i0, j0] of the straight lattice segment (i0,j0) -> (i0+di, j0+dj)."""
    m = pts.size
    i0 = np.arange(m - di)
    j0 = np.arange(m - dj)
    dt_i = pts[i0 + di] - pts[i0]
    slope = (pts[j0 + dj] - pts[j0])[None, :] / dt_i[:, None]
    sqrt_slope = np.sqrt(slope)
    cost = np.zeros((m - di, m - dj))
    # Trapezoid over the di+1 grid points covered by the segment.
    for r in range(di + 1):
        if r == 0:
            weight = (pts[i0 + 1] - pts[i0]) / 2.0
        elif r == di:
            weight = (pts[i0 + di] - pts[i0 + di - 1]) / 2.0
        else:
            weight = (pts[i0 + r + 1] - pts[i0 + r - 1]) / 2.0
        gamma = pts[j0][None, :] + slope * (pts[i0 + r] - pts[i0])[:, None]
        warped = np.interp(gamma.ravel(), pts, qm).reshape(gamma.shape)
        err = (qt[i0 + r][:, None] - warped * sqrt_slope) ** 2
        cost += weight[:, None] * err
    return cost


@dataclass(frozen=True)
class DpAlignment:
    warping: Warping
    cost: float


def dp_align(q_moving: SrvfSample, q_template: SrvfSample) -> DpAlignment:
    """Optimal monotone warping of one SRVF onto another.

    Minimizes the quadrature-weighted squared error between the template and
    the warped-and-rescaled moving SRVF over lattice paths with per-step
    offsets 1..5 in both directions.
    """
    if q_moving.grid != q_template.grid:
        raise GridMismatch("SRVFs must share the grid")
    if q_moving.n_samples != 1 or q_template.n_samples != 1:
        raise ShapeMismatch("dp_align acts on single curves")
    pts = q_moving.grid.points
    gamma, cost = _dp_align_values(
        q_moving.values[0], q_template.values[0], pts
    )
    warping = _warping_from_rows(q_moving, gamma[None, :])
    return DpAlignment(warping=warping, cost=cost)


def _dp_align_values(
    qm: np.ndarray, qt: np.ndarray, pts: np.ndarray
) -> tuple[np.ndarray, float]:
    m = pts.size
    offsets = _dp_offsets()
    seg = {
        (di, dj): _segment_costs(qm, qt, pts, di, dj)
        for di, dj in offsets
        if di < m and dj < m
    }
    dist = np.full((m, m), np.inf)
    dist[0, 0] = 0.0
    choice = np.full((m, m), -1, dtype=int)
    for i in range(1, m):
        best = np.full(m, np.inf)
        pick = np.full(m, -1, dtype=int)
        for idx, (di, dj) in enumerate(offsets):
            if di > i or dj >= m:
                continue
            prev = dist[i - di, : m - dj] + seg[(di, dj)][i - di, : m - dj]
            cand = np.full(m, np.inf)
            cand[dj:] = prev[: m - dj]
            better = cand < best  # strict: earlier (preferred) offsets keep ties
            best[better] = cand[better]
            pick[better] = idx
        dist[i] = best
        choice[i] = pick

    # Backtrack the optimal path from the corner.
    path = [(m - 1, m - 1)]
    i, j = m - 1, m - 1
    while (i, j) != (0, 0):
        di, dj = offsets[choice[i, j]]
        i, j = i - di, j - dj
        path.append((i, j))
    path.reverse()
    node_i = np.array([p[0] for p in path])
    node_j = np.array([p[1] for p in path])
    gamma = np.interp(pts, pts[node_i], pts[node_j])
    return gamma, float(dist[m - 1, m - 1])


def _warp_srvf(q: np.ndarray, gamma: np.ndarray, pts: np.ndarray) -> np.ndarray:
    slope = finite_difference_derivative(gamma[None, :], pts)[0]
    return np.interp(gamma, pts, q) * np.sqrt(np.maximum(slope, 0.0))


@dataclass(frozen=True)
class KarcherElasticResult:
    registered: DiscreteFunctionalSample
    warping: Warping
    converged: bool
    n_iterations: int
    template_srvf: SrvfSample


def elastic_register(
    sample: DiscreteFunctionalSample,
    template: DiscreteFunctionalSample | None = None,
    max_iter: int = 20,
    tol: float = 1e-4,
) -> KarcherElasticResult:
    """Elastic registration of every curve via SRVF alignment.

    With a template, each curve is aligned to it in one pass.  Otherwise the
    template starts as the pointwise mean of the SRVFs and is re-estimated
    from the aligned SRVFs until its relative change drops below ``tol``.
    """
    pts = sample.grid.points
    w = trapezoid_weights(pts)
    qs = srvf_transform(sample).values
    n = sample.n_samples

    if template is not None:
        if template.n_samples != 1:
            raise ShapeMismatch("the template must be a single curve")
        if template.grid != sample.grid:
            raise GridMismatch("template grid differs from the sample grid")
        q_target = srvf_transform(template).values[0]
        max_iter = 1

    gammas = np.tile(pts, (n, 1))
    converged = template is not None
    iterations = 0
    q_template = qs.mean(axis=0) if template is None else q_target
    for iterations in range(1, max_iter + 1):
        aligned = np.empty_like(qs)
        for i in range(n):
            gammas[i], _ = _dp_align_values(qs[i], q_template, pts)
            aligned[i] = _warp_srvf(qs[i], gammas[i], pts)
        if template is not None:
            break
        new_template = aligned.mean(axis=0)
        scale = float(np.sqrt((q_template**2) @ w)) + 1e-12
        change = float(np.sqrt(((new_template - q_template) ** 2) @ w)) / scale
        q_template = new_template
        if change < tol:
            converged = True
            break

    warping = _warping_from_rows(sample, gammas)
    return KarcherElasticResult(
        registered=warping.apply(sample),
        warping=warping,
        converged=converged,
        n_iterations=iterations,
        template_srvf=replace(
            sample, values=q_template[None, :], coordinate_name="q(t)"
        ),
    )

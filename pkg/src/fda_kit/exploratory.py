"""Summary statistics, functional depths, robust statistics, and the three
outlier-detection statistics (functional boxplot, MS-plot, outliergram).

Band membership uses closed bands throughout: touching a band boundary counts
as lying inside, so at n = 2 every curve has depth one in its own band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np
from scipy.stats import chi2

from .basis import BasisFunctionalSample, to_grid
from .errors import DegenerateScale, InsufficientSample
from .samples import DiscreteFunctionalSample, trapezoid_weights

DepthMethod = Literal["fm", "bd", "mbd"]


# -- summary statistics -----------------------------------------------------------


def sample_mean(sample):
    """Pointwise (or coefficient-wise) mean, in the input's representation."""
    if isinstance(sample, BasisFunctionalSample):
        return replace(
            sample, coefficients=sample.coefficients.mean(axis=0, keepdims=True)
        )
    return replace(sample, values=sample.values.mean(axis=0, keepdims=True))


def _as_grid_sample(sample, points=None) -> DiscreteFunctionalSample:
    if isinstance(sample, BasisFunctionalSample):
        return to_grid(sample, points)
    return sample


@dataclass(frozen=True)
class CovarianceSurface:
    """Discretized covariance surface k(t_i, t_j) on the given points."""

    points: np.ndarray
    matrix: np.ndarray


def sample_covariance(sample, points=None) -> CovarianceSurface:
    """Unbiased sample covariance surface, discretized whatever the input."""
    grid_sample = _as_grid_sample(sample, points)
    if grid_sample.n_samples < 2:
        raise InsufficientSample("covariance needs at least two curves")
    return CovarianceSurface(
        points=grid_sample.grid.points,
        matrix=np.cov(grid_sample.values, rowvar=False, ddof=1),
    )


def sample_variance(sample, points=None) -> DiscreteFunctionalSample:
    """Pointwise sample variance (diagonal of the covariance surface)."""
    grid_sample = _as_grid_sample(sample, points)
    if grid_sample.n_samples < 2:
        raise InsufficientSample("variance needs at least two curves")
    var = grid_sample.values.var(axis=0, ddof=1)
    return replace(grid_sample, values=var[None, :], coordinate_name="var")


# -- depths ----------------------------------------------------------------------


@dataclass(frozen=True)
class DepthReport:
    method: DepthMethod
    values: np.ndarray


def fraiman_muniz_depth(sample: DiscreteFunctionalSample) -> DepthReport:
    """Integrated univariate depth 1 - |1/2 - F(x(t))| averaged over time."""
    values = sample.values
    n = values.shape[0]
    ecdf = (values[None, :, :] <= values[:, None, :]).mean(axis=1)
    pointwise = 1.0 - np.abs(0.5 - ecdf)
    pts = sample.grid.points
    span = pts[-1] - pts[0]
    return DepthReport(
        method="fm", values=np.trapezoid(pointwise, pts, axis=1) / span
    )


def _band_accumulate(sample: DiscreteFunctionalSample) -> tuple[np.ndarray, np.ndarray]:
    """Per-curve (band count, time-in-band sum) accumulated pair by pair."""
    values = sample.values
    n = values.shape[0]
    pts = sample.grid.points
    span = pts[-1] - pts[0]
    full = np.zeros(n)
    partial = np.zeros(n)
    for j in range(n - 1):
        for k in range(j + 1, n):
            lower = np.minimum(values[j], values[k])
            upper = np.maximum(values[j], values[k])
            inside = (values >= lower) & (values <= upper)
            full += inside.all(axis=1)
            partial += np.trapezoid(inside.astype(float), pts, axis=1) / span
    return full, partial


def band_depth(sample: DiscreteFunctionalSample) -> DepthReport:
    """Fraction of curve-pair bands that contain the curve at every point."""
    n = sample.n_samples
    if n < 2:
        raise InsufficientSample("band depth needs at least two curves")
    full, _ = _band_accumulate(sample)
    return DepthReport(method="bd", values=full / math.comb(n, 2))


def modified_band_depth(sample: DiscreteFunctionalSample) -> DepthReport:
    """Mean fraction of time spent inside the curve-pair bands."""
    n = sample.n_samples
    if n < 2:
        raise InsufficientSample("band depth needs at least two curves")
    _, partial = _band_accumulate(sample)
    return DepthReport(method="mbd", values=partial / math.comb(n, 2))


def compute_depth(sample: DiscreteFunctionalSample, method: DepthMethod) -> DepthReport:
    if method == "fm":
        return fraiman_muniz_depth(sample)
    if method == "bd":
        return band_depth(sample)
    if method == "mbd":
        return modified_band_depth(sample)
    raise ValueError(f"unknown depth method {method!r}")


def mean_epigraph_index(sample: DiscreteFunctionalSample) -> np.ndarray:
    """Time-averaged fraction of curves lying above (or touching) each curve."""
    values = sample.values
    n = values.shape[0]
    above = (values[None, :, :] >= values[:, None, :]).mean(axis=1)
    pts = sample.grid.points
    span = pts[-1] - pts[0]
    return np.trapezoid(above, pts, axis=1) / span


# -- robust statistics --------------------------------------------------------------


@dataclass(frozen=True)
class GeometricMedianResult:
    curve: DiscreteFunctionalSample
    converged: bool
    n_iterations: int
    objectives: tuple[float, ...]


def geometric_median(
    sample: DiscreteFunctionalSample, tol: float = 1e-8, max_iter: int = 100
) -> GeometricMedianResult:
    """Weiszfeld iteration for the L2 geometric median of the curves."""
    values = sample.values
    w = trapezoid_weights(sample.grid.points)

    def norms_to(z: np.ndarray) -> np.ndarray:
        return np.sqrt(((values - z) ** 2) @ w)

    z = values.mean(axis=0)
    scale = float(np.max(norms_to(z), initial=0.0))
    if scale == 0.0:
        return GeometricMedianResult(
            curve=replace(sample, values=z[None, :]),
            converged=True,
            n_iterations=0,
            objectives=(0.0,),
        )
    objectives = [float(norms_to(z).sum())]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dists = norms_to(z)
        at_point = dists < tol * scale
        if np.any(at_point):
            z = values[int(np.nonzero(at_point)[0][0])]
            objectives.append(float(norms_to(z).sum()))
            converged = True
            break
        weights = 1.0 / dists
        new_z = (weights[:, None] * values).sum(axis=0) / weights.sum()
        step = float(np.sqrt(((new_z - z) ** 2) @ w))
        z_norm = float(np.sqrt((z**2) @ w))
        z = new_z
        objectives.append(float(norms_to(z).sum()))
        if step < tol * max(z_norm, scale):
            converged = True
            break
    return GeometricMedianResult(
        curve=replace(sample, values=z[None, :]),
        converged=converged,
        n_iterations=iterations,
        objectives=tuple(objectives),
    )


def _depth_order(depths: np.ndarray) -> np.ndarray:
    """Curve indices from deepest to shallowest; ties keep the smaller index."""
    return np.lexsort((np.arange(depths.size), -depths))


def depth_based_median(
    sample: DiscreteFunctionalSample, depth_method: DepthMethod = "mbd"
) -> DiscreteFunctionalSample:
    """The deepest curve in the sample (smallest index on ties)."""
    depths = compute_depth(sample, depth_method).values
    return sample.row(int(_depth_order(depths)[0]))


def trimmed_mean(
    sample: DiscreteFunctionalSample,
    proportion: float,
    depth_method: DepthMethod = "mbd",
) -> DiscreteFunctionalSample:
    """Mean of the deepest curves after discarding floor(proportion * n)."""
    if not 0.0 <= proportion < 1.0:
        raise ValueError("proportion must be in [0, 1)")
    n = sample.n_samples
    keep = n - int(proportion * n)
    order = _depth_order(compute_depth(sample, depth_method).values)
    kept = sample.values[np.sort(order[:keep])]
    return replace(sample, values=kept.mean(axis=0, keepdims=True))


# -- functional boxplot ----------------------------------------------------------------


@dataclass(frozen=True)
class BoxplotStats:
    median_index: int
    central_lower: np.ndarray
    central_upper: np.ndarray
    fence_lower: np.ndarray
    fence_upper: np.ndarray
    non_outlying_lower: np.ndarray
    non_outlying_upper: np.ndarray
    outlier_flags: np.ndarray
    factor: float
    prob_envelopes: tuple[tuple[float, np.ndarray, np.ndarray], ...] = ()
    depths: np.ndarray | None = None


def boxplot_stats(
    sample: DiscreteFunctionalSample,
    depth_method: DepthMethod = "mbd",
    factor: float = 1.5,
    prob: Sequence[float] | None = None,
) -> BoxplotStats:
    """Functional boxplot geometry and outlier flags.

    The central envelope covers the deepest half of the curves; the fences
    inflate it by ``factor`` times its width; a curve exiting the fences at
    any grid point is an outlier; the non-outlying envelope covers the rest.
    """
    n = sample.n_samples
    if n < 2:
        raise InsufficientSample("a boxplot needs at least two curves")
    if factor <= 0:
        raise ValueError("factor must be positive")
    depths = compute_depth(sample, depth_method).values
    order = _depth_order(depths)
    values = sample.values

    central = values[order[: math.ceil(n / 2)]]
    central_lower = central.min(axis=0)
    central_upper = central.max(axis=0)
    width = central_upper - central_lower
    fence_lower = central_lower - factor * width
    fence_upper = central_upper + factor * width
    flags = np.any((values < fence_lower) | (values > fence_upper), axis=1)
    inliers = values[~flags]

    envelopes = []
    if prob is not None:
        for p in prob:
            if not 0.0 < p <= 1.0:
                raise ValueError("prob values must be in (0, 1]")
            deep = values[order[: math.ceil(p * n)]]
            envelopes.append((float(p), deep.min(axis=0), deep.max(axis=0)))

    return BoxplotStats(
        median_index=int(order[0]),
        central_lower=central_lower,
        central_upper=central_upper,
        fence_lower=fence_lower,
        fence_upper=fence_upper,
        non_outlying_lower=inliers.min(axis=0),
        non_outlying_upper=inliers.max(axis=0),
        outlier_flags=flags,
        factor=float(factor),
        prob_envelopes=tuple(envelopes),
        depths=depths,
    )


# -- magnitude-shape plot -----------------------------------------------------------------


@dataclass(frozen=True)
class MsplotStats:
    mo: np.ndarray
    vo: np.ndarray
    outlier_flags: np.ndarray
    center: np.ndarray
    scatter: np.ndarray
    cutoff: float


def msplot_stats(sample: DiscreteFunctionalSample) -> MsplotStats:
    """Magnitude (MO) and shape (VO) outlyingness with a robust elliptical cutoff.

    Pointwise outlyingness standardizes each cross-section by its median and
    1.4826 * MAD; MO is its time average and VO the time-averaged squared
    deviation from MO.  The (MO, VO) cloud gets one concentration step (mean
    and covariance of the half with the smallest classical Mahalanobis
    distances) and curves beyond the chi-square(2) 0.993 quantile are flagged.
    """
    n = sample.n_samples
    if n < 3:
        raise InsufficientSample("the MS-plot needs at least three curves")
    values = sample.values
    med = np.median(values, axis=0)
    mad = np.median(np.abs(values - med), axis=0)
    if np.any(mad == 0.0):
        raise DegenerateScale("zero cross-sectional MAD at some grid point")
    outly = (values - med) / (1.4826 * mad)
    pts = sample.grid.points
    span = pts[-1] - pts[0]
    mo = np.trapezoid(outly, pts, axis=1) / span
    vo = np.trapezoid((outly - mo[:, None]) ** 2, pts, axis=1) / span

    cloud = np.column_stack([mo, vo])
    center, scatter = _concentrated_moments(cloud)
    cutoff = float(chi2.ppf(0.993, df=2))
    d2 = _mahalanobis_sq(cloud, center, scatter)
    return MsplotStats(
        mo=mo,
        vo=vo,
        outlier_flags=d2 > cutoff,
        center=center,
        scatter=scatter,
        cutoff=cutoff,
    )


def _mahalanobis_sq(cloud: np.ndarray, center: np.ndarray, scatter: np.ndarray) -> np.ndarray:
    centered = cloud - center
    solved = np.linalg.solve(scatter, centered.T).T
    return (centered * solved).sum(axis=1)


def _spd_cov(points: np.ndarray) -> np.ndarray:
    cov = np.cov(points, rowvar=False, ddof=1)
    trace = float(np.trace(cov))
    if trace <= 0.0:
        trace = 1.0
    eps = 0.0
    while True:
        try:
            np.linalg.cholesky(cov + eps * np.eye(2))
            return cov + eps * np.eye(2)
        except np.linalg.LinAlgError:
            eps = max(eps * 10.0, 1e-12 * trace)
            if eps > trace:
                raise DegenerateScale("degenerate (MO, VO) scatter") from None


def _concentrated_moments(cloud: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    center = cloud.mean(axis=0)
    scatter = _spd_cov(cloud)
    d2 = _mahalanobis_sq(cloud, center, scatter)
    h = math.ceil(cloud.shape[0] / 2)
    keep = np.argsort(d2, kind="stable")[:h]
    subset = cloud[keep]
    return subset.mean(axis=0), _spd_cov(subset)


# -- outliergram ------------------------------------------------------------------------------


@dataclass(frozen=True)
class OutliergramStats:
    mei: np.ndarray
    mbd: np.ndarray
    parabola: tuple[float, float, float]
    distances: np.ndarray
    outlier_flags: np.ndarray


def outliergram_parabola_coefficients(n: int) -> tuple[float, float, float]:
    """Coefficients (a0, a1, a2) with MBD = a0 + a1*MEI + a2*MEI^2 for every
    sample of n mutually non-crossing curves."""
    if n < 2:
        raise InsufficientSample("the parabola needs at least two curves")
    return (-2.0 / (n * (n - 1)), 2.0 * (n + 1) / (n - 1), -2.0 * n / (n - 1))


def outliergram_stats(sample: DiscreteFunctionalSample) -> OutliergramStats:
    """MEI/MBD scatter with distances below the non-crossing parabola.

    Shape outliers sit below the parabola; curves whose distance exceeds
    Q3 + 1.5 * IQR of the sample distances are flagged.
    """
    n = sample.n_samples
    if n < 2:
        raise InsufficientSample("the outliergram needs at least two curves")
    mei = mean_epigraph_index(sample)
    mbd = modified_band_depth(sample).values
    a0, a1, a2 = outliergram_parabola_coefficients(n)
    distances = (a0 + a1 * mei + a2 * mei**2) - mbd
    q1, q3 = np.percentile(distances, [25.0, 75.0])
    threshold = q3 + 1.5 * (q3 - q1)
    return OutliergramStats(
        mei=mei,
        mbd=mbd,
        parabola=(a0, a1, a2),
        distances=distances,
        outlier_flags=distances > threshold,
    )

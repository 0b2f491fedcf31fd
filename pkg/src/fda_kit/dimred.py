"""Functional PCA and dependence-based variable selection.

FPCA solves the quadrature-weighted eigenproblem of the sample covariance;
the selection methods (mRMR, RKHS-based greedy search, maxima hunting, and
recursive maxima hunting) share the distance-correlation dependence measure.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .basis import BasisFunctionalSample, LinearDifferentialOperatorSpec
from .errors import (
    DegenerateSample,
    DegenerateVariance,
    GridMismatch,
    InsufficientSample,
    NoMaximaFound,
    SingularCovariance,
    TooManyComponents,
)
from .samples import (
    DiscreteFunctionalSample,
    Grid,
    finite_difference_derivative,
    trapezoid_weights,
)


# -- functional principal components ------------------------------------------------


@dataclass(frozen=True)
class FpcaModel:
    """Mean curve, orthonormal components, and their variances."""

    grid: Grid
    mean: np.ndarray
    components: np.ndarray  # (J, M), unit L2 norm under the quadrature
    eigenvalues: np.ndarray  # (J,), nonincreasing, nonnegative
    quadrature_weights: np.ndarray

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])

    def mean_curve(self) -> DiscreteFunctionalSample:
        return DiscreteFunctionalSample(grid=self.grid, values=self.mean[None, :])

    def component_curves(self) -> DiscreteFunctionalSample:
        return DiscreteFunctionalSample(grid=self.grid, values=self.components)


def _grid_operator_matrix(
    operator: LinearDifferentialOperatorSpec, points: np.ndarray
) -> np.ndarray:
    """Matrix form of L on grid functions, using the library's FD stencils."""
    m = points.size
    result = np.zeros((m, m))
    power = np.eye(m)
    for order, weight in enumerate(operator.weights):
        if order > 0:
            # Rows of `power` are the images of the canonical basis functions.
            power = finite_difference_derivative(power, points)
        if weight != 0.0:
            result += weight * power.T
    return result


def fpca_fit(
    sample: DiscreteFunctionalSample,
    n_components: int,
    lam: float = 0.0,
    operator: LinearDifferentialOperatorSpec | None = None,
) -> FpcaModel:
    """Eigendecomposition of the quadrature-weighted sample covariance.

    With ``lam > 0`` the components solve the roughness-penalized generalized
    eigenproblem instead, trading variance for smoothness.
    """
    n, m = sample.values.shape
    max_components = min(n - 1, m)
    if n_components < 1 or n_components > max_components:
        raise TooManyComponents(
            f"n_components must be in 1..{max_components} for n={n}, M={m}"
        )
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    mean = sample.values.mean(axis=0)
    centered = sample.values - mean
    cov = (centered.T @ centered) / (n - 1)
    w = trapezoid_weights(sample.grid.points)
    sqrt_w = np.sqrt(w)
    weighted = sqrt_w[:, None] * cov * sqrt_w[None, :]

    if lam > 0:
        op = operator or LinearDifferentialOperatorSpec.derivative(2)
        l_mat = _grid_operator_matrix(op, sample.grid.points)
        r = l_mat.T @ (w[:, None] * l_mat)
        b = np.eye(m) + lam * (r / np.outer(sqrt_w, sqrt_w))
        eigvals, eigvecs = scipy.linalg.eigh(weighted, (b + b.T) / 2.0)
    else:
        eigvals, eigvecs = np.linalg.eigh(weighted)

    order = np.argsort(eigvals)[::-1][:n_components]
    eigvals = np.maximum(eigvals[order], 0.0)
    components = eigvecs[:, order].T / sqrt_w[None, :]
    norms = np.sqrt((components**2) @ w)
    components = components / norms[:, None]
    for j in range(components.shape[0]):
        peak = int(np.argmax(np.abs(components[j])))
        if components[j, peak] < 0:
            components[j] = -components[j]
    return FpcaModel(
        grid=sample.grid,
        mean=mean,
        components=components,
        eigenvalues=eigvals,
        quadrature_weights=w,
    )


def fpca_transform(model: FpcaModel, sample: DiscreteFunctionalSample) -> np.ndarray:
    """Scores: quadrature inner products of centered curves with components."""
    if sample.grid != model.grid:
        raise GridMismatch("sample grid differs from the model grid")
    centered = sample.values - model.mean
    return centered @ (model.components * model.quadrature_weights).T


def fpca_inverse(model: FpcaModel, scores: np.ndarray) -> DiscreteFunctionalSample:
    """Curves mu + sum_j score_j * component_j."""
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    if scores.shape[1] > model.n_components:
        raise TooManyComponents(
            f"scores have width {scores.shape[1]}, model holds "
            f"{model.n_components} components"
        )
    values = model.mean + scores @ model.components[: scores.shape[1]]
    return DiscreteFunctionalSample(grid=model.grid, values=values)


# -- plain feature extraction ---------------------------------------------------------


def evaluation_features(
    sample: DiscreteFunctionalSample, points: Sequence[float] | np.ndarray
) -> np.ndarray:
    """Curve values at the chosen points, as a plain (n, m) feature matrix."""
    return sample.evaluate(points)


def coefficient_features(sample: BasisFunctionalSample) -> np.ndarray:
    """Basis coefficients as a plain (n, K) feature matrix."""
    return np.array(sample.coefficients)


# -- distance correlation ---------------------------------------------------------------


def labels_to_onehot(labels: Sequence | np.ndarray) -> np.ndarray:
    """One-hot embedding of class labels, one column per distinct label."""
    arr = np.asarray(labels)
    classes = np.unique(arr)
    return (arr[:, None] == classes[None, :]).astype(float)


def _as_observation_matrix(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype.kind in "USOb":
        return labels_to_onehot(arr)
    arr = arr.astype(float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("observations must form a vector or matrix")
    return arr


def distance_correlation(x, y) -> float:
    """Empirical distance correlation in [0, 1] (O(n^2) double centering).

    Accepts numeric vectors or row-wise observation matrices; non-numeric
    inputs are treated as class labels and one-hot encoded.
    """
    xm = _as_observation_matrix(x)
    ym = _as_observation_matrix(y)
    n = xm.shape[0]
    if ym.shape[0] != n:
        raise ValueError("x and y must pair the same observations")
    if n < 2:
        raise DegenerateSample("distance correlation needs n >= 2")

    def centered_distances(a: np.ndarray) -> np.ndarray:
        diff = a[:, None, :] - a[None, :, :]
        d = np.sqrt((diff**2).sum(axis=2))
        return d - d.mean(axis=0) - d.mean(axis=1)[:, None] + d.mean()

    ax = centered_distances(xm)
    ay = centered_distances(ym)
    dvar_x = float((ax * ax).mean())
    dvar_y = float((ay * ay).mean())
    if dvar_x <= 0.0 or dvar_y <= 0.0:
        raise DegenerateSample("zero distance variance (constant input)")
    dcov2 = max(float((ax * ay).mean()), 0.0)
    return float(np.sqrt(dcov2 / np.sqrt(dvar_x * dvar_y)))


DependenceMeasure = Callable[[np.ndarray, np.ndarray], float]


def _safe_dependence(measure: DependenceMeasure, x, y) -> float:
    """Dependence value, with degenerate (constant) inputs scored as 0."""
    try:
        return measure(x, y)
    except DegenerateSample:
        return 0.0


# -- variable selection -------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionResult:
    """Chosen grid locations in selection order, with criterion values."""

    selected_points: np.ndarray
    selected_indices: np.ndarray
    scores: np.ndarray

    def __post_init__(self) -> None:
        idx = np.asarray(self.selected_indices, dtype=int)
        if len(set(idx.tolist())) != idx.size:
            raise ValueError("selected indices must be distinct")
        object.__setattr__(self, "selected_indices", idx)
        object.__setattr__(
            self, "selected_points", np.asarray(self.selected_points, dtype=float)
        )
        object.__setattr__(self, "scores", np.asarray(self.scores, dtype=float))


def _check_labels(labels, n: int, min_classes: int = 2) -> np.ndarray:
    y = np.asarray(labels)
    if y.shape[0] != n:
        raise ValueError("one label per curve required")
    if np.unique(y).size < min_classes:
        raise ValueError(f"at least {min_classes} distinct classes required")
    return y


def mrmr_select(
    sample: DiscreteFunctionalSample,
    labels,
    n_features: int,
    relevance: DependenceMeasure | None = None,
    redundancy: DependenceMeasure | None = None,
) -> SelectionResult:
    """Greedy minimum-redundancy maximum-relevance point selection.

    Scores candidates by relevance minus the mean redundancy with the points
    already selected (distance correlation for both, unless overridden); ties
    go to the smaller grid index.
    """
    values = sample.values
    n, m = values.shape
    y = labels_to_onehot(_check_labels(labels, n))
    if not 1 <= n_features <= m:
        raise ValueError(f"n_features must be in 1..{m}")
    rel_measure = relevance or distance_correlation
    red_measure = redundancy or distance_correlation

    rel = np.array(
        [_safe_dependence(rel_measure, values[:, j], y) for j in range(m)]
    )
    selected = [int(np.argmax(rel))]
    scores = [float(rel[selected[0]])]
    red_sum = np.zeros(m)
    while len(selected) < n_features:
        last = selected[-1]
        for j in range(m):
            red_sum[j] += _safe_dependence(red_measure, values[:, j], values[:, last])
        criterion = rel - red_sum / len(selected)
        criterion[selected] = -np.inf
        best = int(np.argmax(criterion))
        selected.append(best)
        scores.append(float(criterion[best]))
    idx = np.asarray(selected)
    return SelectionResult(
        selected_points=sample.grid.points[idx],
        selected_indices=idx,
        scores=np.asarray(scores),
    )


def _pooled_class_covariance(values: np.ndarray, y: np.ndarray) -> np.ndarray:
    classes = np.unique(y)
    n = values.shape[0]
    pooled = np.zeros((values.shape[1], values.shape[1]))
    for cls in classes:
        group = values[y == cls]
        if group.shape[0] < 2:
            raise InsufficientSample("each class needs at least two curves")
        pooled += (group.shape[0] - 1) * np.cov(group, rowvar=False, ddof=1)
    return pooled / (n - classes.size)


def rkhs_variable_selection(
    sample: DiscreteFunctionalSample, labels, n_features: int
) -> SelectionResult:
    """Greedy growth of the point set maximizing the between-class
    Mahalanobis distance under the pooled covariance.

    The covariance block is jittered by 1e-10 * (trace / size) before each
    solve; the criterion after every addition is returned.
    """
    values = sample.values
    n, m = values.shape
    y = _check_labels(labels, n)
    classes = np.unique(y)
    if classes.size != 2:
        raise ValueError("RKHS variable selection is a two-class method")
    if not 1 <= n_features <= m:
        raise ValueError(f"n_features must be in 1..{m}")
    delta = values[y == classes[1]].mean(axis=0) - values[y == classes[0]].mean(axis=0)
    pooled = _pooled_class_covariance(values, y)

    def criterion(points: list[int]) -> float:
        block = pooled[np.ix_(points, points)]
        eps = 1e-10 * (np.trace(block) / len(points))
        block = block + eps * np.eye(len(points))
        try:
            solved = np.linalg.solve(block, delta[points])
        except np.linalg.LinAlgError:
            raise SingularCovariance(
                f"covariance block at points {points} is singular"
            ) from None
        return float(delta[points] @ solved)

    selected: list[int] = []
    scores: list[float] = []
    for _ in range(n_features):
        best_j, best_value = -1, -np.inf
        for j in range(m):
            if j in selected:
                continue
            value = criterion(selected + [j])
            if value > best_value:
                best_j, best_value = j, value
        selected.append(best_j)
        scores.append(best_value)
    idx = np.asarray(selected)
    return SelectionResult(
        selected_points=sample.grid.points[idx],
        selected_indices=idx,
        scores=np.asarray(scores),
    )


def _local_maxima(r: np.ndarray, window: int) -> list[int]:
    """Indices strictly above every neighbor within the window; the smallest
    index represents a plateau."""
    m = r.size
    out = []
    for j in range(m):
        lo, hi = max(0, j - window), min(m, j + window + 1)
        is_max = True
        for k in range(lo, hi):
            if k == j:
                continue
            if r[k] > r[j] or (r[k] == r[j] and k < j):
                is_max = False
                break
        if is_max:
            out.append(j)
    return out


def maxima_hunting(
    sample: DiscreteFunctionalSample,
    labels,
    n_features: int | None = None,
    window: int = 1,
) -> SelectionResult:
    """Local maxima of the pointwise dependence between X(t) and the label."""
    values = sample.values
    y = labels_to_onehot(_check_labels(labels, values.shape[0]))
    if window < 1:
        raise ValueError("window must be >= 1")
    r = np.array(
        [
            _safe_dependence(distance_correlation, values[:, j], y)
            for j in range(values.shape[1])
        ]
    )
    maxima = _local_maxima(r, window)
    if not maxima:
        raise NoMaximaFound("the dependence curve has no local maxima")
    maxima.sort(key=lambda j: (-r[j], j))
    if n_features is not None:
        maxima = maxima[:n_features]
    idx = np.asarray(maxima)
    return SelectionResult(
        selected_points=sample.grid.points[idx],
        selected_indices=idx,
        scores=r[idx],
    )


def recursive_maxima_hunting(
    sample: DiscreteFunctionalSample,
    labels,
    max_features: int,
    dependence_threshold: float = 0.1,
) -> SelectionResult:
    """Iterated argmax of dependence with a linear correction between rounds.

    After selecting t*, every curve is decorrelated from X(t*) using the
    empirical covariance of the current corrected sample, so the information
    carried by the selected point is removed before the next round.
    """
    values = sample.values.copy()
    n, m = values.shape
    y = labels_to_onehot(_check_labels(labels, n))
    if max_features < 1:
        raise ValueError("max_features must be >= 1")

    selected: list[int] = []
    scores: list[float] = []
    while len(selected) < max_features:
        r = np.array(
            [
                0.0
                if j in selected
                else _safe_dependence(distance_correlation, values[:, j], y)
                for j in range(m)
            ]
        )
        best = int(np.argmax(r))
        if r[best] < dependence_threshold:
            break
        cov = np.cov(values, rowvar=False, ddof=1)
        if cov[best, best] <= 0.0:
            raise DegenerateVariance(
                f"zero variance at selected point {sample.grid.points[best]}"
            )
        selected.append(best)
        scores.append(float(r[best]))
        beta = cov[:, best] / cov[best, best]
        values = values - np.outer(values[:, best], beta)
    if not selected:
        raise NoMaximaFound(
            f"no point reaches the dependence threshold {dependence_threshold}"
        )
    idx = np.asarray(selected)
    return SelectionResult(
        selected_points=sample.grid.points[idx],
        selected_indices=idx,
        scores=np.asarray(scores),
    )

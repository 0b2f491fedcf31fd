"""Linear smoothers, penalized basis fitting, and smoothing-parameter search.

Kernel smoothers are M_out-by-M_in hat matrices applied to the discretized
curves; basis smoothing solves a penalized least-squares system per curve.
Leave-one-out CV and GCV scores are derived from the hat matrix diagonal and
trace, and both are minimized.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .basis import BasisSpec, LinearDifferentialOperatorSpec, evaluate_basis
from .errors import (
    AllCandidatesFailed,
    DegenerateRow,
    FdaKitError,
    GridMismatch,
    LeverageOne,
    PenaltyUndefined,
    SingularSystem,
)
from .samples import DiscreteFunctionalSample, Grid, refine_grid, trapezoid_weights


def worker_count() -> int:
    """Worker cap from FDA_KIT_THREADS (default 1: serial evaluation)."""
    raw = os.environ.get("FDA_KIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# -- kernels -------------------------------------------------------------------


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric nonnegative weighting kernel."""

    kind: Literal["gaussian", "uniform", "epanechnikov"] = "gaussian"

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "uniform", "epanechnikov"):
            raise ValueError(f"unknown kernel {self.kind!r}")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "gaussian":
            return np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)
        if self.kind == "uniform":
            return np.where(np.abs(u) <= 1.0, 0.5, 0.0)
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


# -- smoother specifications -----------------------------------------------------


@dataclass(frozen=True)
class NadarayaWatson:
    bandwidth: float
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self) -> None:
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")

    def with_parameter(self, value: float) -> "NadarayaWatson":
        return replace(self, bandwidth=float(value))


@dataclass(frozen=True)
class LocalLinearRegression:
    bandwidth: float
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self) -> None:
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")

    def with_parameter(self, value: float) -> "LocalLinearRegression":
        return replace(self, bandwidth=float(value))


@dataclass(frozen=True)
class KNeighbors:
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def with_parameter(self, value: int) -> "KNeighbors":
        return replace(self, k=int(value))


@dataclass(frozen=True)
class BasisSmoother:
    basis: BasisSpec
    lam: float = 0.0
    operator: LinearDifferentialOperatorSpec = field(
        default_factory=lambda: LinearDifferentialOperatorSpec.derivative(2)
    )

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")

    def with_parameter(self, value: float) -> "BasisSmoother":
        return replace(self, lam=float(value))


SmootherSpec = NadarayaWatson | LocalLinearRegression | KNeighbors | BasisSmoother
KernelSmoother = NadarayaWatson | LocalLinearRegression | KNeighbors


# -- hat matrices ----------------------------------------------------------------


@dataclass(frozen=True)
class HatMatrix:
    """Linear smoothing operator S mapping input-grid values to output-grid values."""

    entries: np.ndarray
    input_grid: Grid
    output_grid: Grid

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    @property
    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.entries)


def hat_matrix(
    spec: KernelSmoother,
    input_grid: Grid,
    output_grid: Grid | None = None,
) -> HatMatrix:
    """Hat matrix of a kernel smoother (basis smoothing has its own path)."""
    if isinstance(spec, BasisSmoother):
        raise TypeError("basis smoothing does not expose a kernel hat matrix")
    out_grid = input_grid if output_grid is None else output_grid
    t_in = input_grid.points
    t_out = out_grid.points
    d = t_out[:, None] - t_in[None, :]

    if isinstance(spec, KNeighbors):
        if spec.k > t_in.size:
            raise ValueError("k exceeds the number of input grid points")
        dist = np.abs(d)
        kth = np.sort(dist, axis=1)[:, spec.k - 1]
        member = dist <= kth[:, None]  # rank-k ties are all included
        entries = member / member.sum(axis=1, keepdims=True)
        return HatMatrix(entries=entries, input_grid=input_grid, output_grid=out_grid)

    weights = spec.kernel(d / spec.bandwidth)
    if isinstance(spec, LocalLinearRegression):
        s1 = (weights * d).sum(axis=1, keepdims=True)
        s2 = (weights * d * d).sum(axis=1, keepdims=True)
        weights = weights * (s2 - d * s1)
    row_sums = weights.sum(axis=1, keepdims=True)
    bad = ~np.isfinite(row_sums) | (row_sums <= 0.0)
    if np.any(bad):
        i = int(np.nonzero(bad.ravel())[0][0])
        raise DegenerateRow(f"kernel weights vanish for output point {t_out[i]}")
    return HatMatrix(
        entries=weights / row_sums, input_grid=input_grid, output_grid=out_grid
    )


def basis_hat_matrix(
    spec: BasisSmoother, input_grid: Grid, output_grid: Grid | None = None
) -> HatMatrix:
    """Hat matrix S = Phi (Phi' Phi + lambda R)^-1 Phi' of penalized basis fitting."""
    out_grid = input_grid if output_grid is None else output_grid
    design_in = evaluate_basis(spec.basis, input_grid.points).T  # (M_in, K)
    design_out = evaluate_basis(spec.basis, out_grid.points).T
    r = penalty_matrix(spec.basis, spec.operator, input_grid.points)
    coef_map = _solve_normal_equations(
        design_in.T @ design_in + spec.lam * r, design_in.T
    )
    return HatMatrix(
        entries=design_out @ coef_map, input_grid=input_grid, output_grid=out_grid
    )


def smooth(spec: SmootherSpec, sample: DiscreteFunctionalSample) -> DiscreteFunctionalSample:
    """Replace every curve by its smoothed version on the same grid."""
    if isinstance(spec, BasisSmoother):
        fit = penalized_basis_fit(sample, spec.basis, spec.lam, spec.operator)
        values = fit.coefficients @ evaluate_basis(spec.basis, sample.grid.points)
        return replace(sample, values=values)
    hat = hat_matrix(spec, sample.grid)
    return replace(sample, values=sample.values @ hat.entries.T)


# -- penalized basis fitting -------------------------------------------------------


def penalty_matrix(
    basis: BasisSpec,
    operator: LinearDifferentialOperatorSpec,
    grid_points: np.ndarray,
    refinement: int = 10,
) -> np.ndarray:
    """Gram matrix R_jk = integral (L phi_j)(L phi_k) by trapezoid quadrature.

    The quadrature grid subdivides every interval of ``grid_points`` into
    ``refinement`` equal parts.
    """
    fine = refine_grid(np.asarray(grid_points, dtype=float), refinement)
    applied = np.zeros((basis.n_basis, fine.size))
    for order, weight in enumerate(operator.weights):
        if weight != 0.0:
            applied += weight * evaluate_basis(basis, fine, derivative=order)
    w = trapezoid_weights(fine)
    return (applied * w) @ applied.T


def _solve_normal_equations(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b with escalating diagonal jitter before giving up."""
    mean_diag = float(np.mean(np.diagonal(a)))
    if mean_diag == 0.0:
        mean_diag = 1.0
    for eps in (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6):
        try:
            x = np.linalg.solve(a + eps * mean_diag * np.eye(a.shape[0]), b)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(x)):
            return x
    raise SingularSystem("normal equations remain singular after jitter")


def penalized_basis_fit(
    sample: DiscreteFunctionalSample,
    basis: BasisSpec,
    lam: float = 0.0,
    operator: LinearDifferentialOperatorSpec | None = None,
):
    """Per-curve coefficients solving (Phi'Phi + lambda R) c = Phi' x."""
    from .basis import BasisFunctionalSample

    if lam < 0:
        raise ValueError("lambda must be >= 0")
    op = operator or LinearDifferentialOperatorSpec.derivative(2)
    design = evaluate_basis(basis, sample.grid.points).T  # (M, K)
    lhs = design.T @ design
    if lam > 0:
        lhs = lhs + lam * penalty_matrix(basis, op, sample.grid.points)
    coefs = _solve_normal_equations(lhs, design.T @ sample.values.T).T
    return BasisFunctionalSample(
        basis=basis,
        coefficients=coefs,
        name=sample.name,
        argument_name=sample.argument_name,
        coordinate_name=sample.coordinate_name,
    )


# -- validation scores ---------------------------------------------------------------


@dataclass(frozen=True)
class PenaltyFunctionSpec:
    """Multiplicative penalty Xi(S) applied to the mean squared residual."""

    kind: Literal["default", "akaike", "shibata"] = "default"

    def __post_init__(self) -> None:
        if self.kind not in ("default", "akaike", "shibata"):
            raise ValueError(f"unknown penalty {self.kind!r}")

    def __call__(self, hat: HatMatrix) -> float:
        m = hat.entries.shape[0]
        ratio = hat.trace / m
        if self.kind == "default":
            if ratio >= 1.0:
                raise PenaltyUndefined(
                    f"default GCV penalty undefined for tr(S)/M = {ratio}"
                )
            return 1.0 / (1.0 - ratio) ** 2
        if self.kind == "akaike":
            return float(np.exp(2.0 * ratio))
        return 1.0 + 2.0 * ratio


def _check_scoring_hat(hat: HatMatrix, sample: DiscreteFunctionalSample) -> None:
    if hat.output_grid != hat.input_grid:
        raise GridMismatch("validation scores need output grid == input grid")
    if hat.input_grid != sample.grid:
        raise GridMismatch("hat matrix grid differs from the sample grid")


def loo_cv_score(hat: HatMatrix, sample: DiscreteFunctionalSample) -> float:
    """Mean over curves of the leave-one-out CV criterion (lower is better)."""
    _check_scoring_hat(hat, sample)
    leverage = hat.diagonal
    if np.any(np.abs(1.0 - leverage) < 1e-12):
        raise LeverageOne("some diagonal entry of S equals 1")
    fitted = sample.values @ hat.entries.T
    deflated = (sample.values - fitted) / (1.0 - leverage)
    return float(np.mean(deflated**2))


def gcv_score(
    hat: HatMatrix,
    sample: DiscreteFunctionalSample,
    penalty: PenaltyFunctionSpec | None = None,
) -> float:
    """Penalized mean squared residual (lower is better)."""
    _check_scoring_hat(hat, sample)
    pen = penalty or PenaltyFunctionSpec()
    fitted = sample.values @ hat.entries.T
    return pen(hat) * float(np.mean((sample.values - fitted) ** 2))


@dataclass(frozen=True)
class ScorerSpec:
    kind: Literal["loo", "gcv"] = "gcv"
    penalty: PenaltyFunctionSpec = field(default_factory=PenaltyFunctionSpec)

    def __call__(self, hat: HatMatrix, sample: DiscreteFunctionalSample) -> float:
        if self.kind == "loo":
            return loo_cv_score(hat, sample)
        return gcv_score(hat, sample, self.penalty)


# -- parameter search ------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreEntry:
    parameter: float
    score: float | None
    error: str | None = None


@dataclass(frozen=True)
class SearchResult:
    parameter: float
    spec: SmootherSpec
    score: float
    table: tuple[ScoreEntry, ...]


def parameter_search(
    family: SmootherSpec,
    candidates,
    scorer: ScorerSpec,
    sample: DiscreteFunctionalSample,
) -> SearchResult:
    """Score every candidate parameter and return the argmin.

    Ties go to the smaller parameter; the full score table is returned for
    inspection.  Candidates whose evaluation raises are recorded and skipped.
    """
    cands = list(candidates)
    if not cands:
        raise ValueError("candidate list must not be empty")

    def evaluate(value) -> ScoreEntry:
        try:
            spec = family.with_parameter(value)
            if isinstance(spec, BasisSmoother):
                hat = basis_hat_matrix(spec, sample.grid)
            else:
                hat = hat_matrix(spec, sample.grid)
            return ScoreEntry(parameter=value, score=scorer(hat, sample))
        except FdaKitError as exc:
            return ScoreEntry(parameter=value, score=None, error=type(exc).__name__)

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table = tuple(pool.map(evaluate, cands))
    else:
        table = tuple(evaluate(c) for c in cands)

    scored = [e for e in table if e.score is not None]
    if not scored:
        raise AllCandidatesFailed(
            "; ".join(f"{e.parameter}: {e.error}" for e in table)
        )
    best = min(scored, key=lambda e: (e.score, e.parameter))
    return SearchResult(
        parameter=best.parameter,
        spec=family.with_parameter(best.parameter),
        score=best.score,
        table=table,
    )

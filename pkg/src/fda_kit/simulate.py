"""Synthetic functional data: Gaussian processes and multimodal bump curves.

All generators draw from numpy's seeded PCG64 generator, so a fixed seed
reproduces the output bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import NotPositiveDefinite
from .samples import DiscreteFunctionalSample, build_discrete_sample


@dataclass(frozen=True)
class CovarianceKernelSpec:
    """Stationary or polynomial covariance function k(s, t)."""

    kind: Literal["brownian", "exponential", "gaussian", "matern", "polynomial"]
    variance: float = 1.0
    length_scale: float = 1.0
    nu: float = 1.5
    bias: float = 0.0
    slope: float = 1.0
    degree: int = 1

    def __post_init__(self) -> None:
        if self.variance <= 0:
            raise ValueError("variance must be positive")
        if self.kind in ("exponential", "gaussian", "matern") and self.length_scale <= 0:
            raise ValueError("length_scale must be positive")
        if self.kind == "matern" and self.nu not in (0.5, 1.5, 2.5):
            raise ValueError("Matern nu must be one of 0.5, 1.5, 2.5")
        if self.kind == "polynomial":
            if self.bias < 0:
                raise ValueError("polynomial bias must be >= 0")
            if self.degree < 0 or self.degree != int(self.degree):
                raise ValueError("polynomial degree must be a natural number")
        if self.kind not in ("brownian", "exponential", "gaussian", "matern", "polynomial"):
            raise ValueError(f"unknown covariance kind {self.kind!r}")


def kernel_matrix(
    spec: CovarianceKernelSpec, points_s: np.ndarray, points_t: np.ndarray | None = None
) -> np.ndarray:
    """Covariance matrix k(s_i, t_j) for the given point sets."""
    s = np.atleast_1d(np.asarray(points_s, dtype=float))
    t = s if points_t is None else np.atleast_1d(np.asarray(points_t, dtype=float))
    ss, tt = s[:, None], t[None, :]
    v = spec.variance
    if spec.kind == "brownian":
        return v * np.minimum(ss, tt)
    if spec.kind == "polynomial":
        return v * (spec.slope * ss * tt + spec.bias) ** spec.degree
    r = np.abs(ss - tt)
    length = spec.length_scale
    if spec.kind == "exponential" or (spec.kind == "matern" and spec.nu == 0.5):
        return v * np.exp(-r / length)
    if spec.kind == "gaussian":
        return v * np.exp(-((ss - tt) ** 2) / (2.0 * length**2))
    if spec.nu == 1.5:
        z = math.sqrt(3.0) * r / length
        return v * (1.0 + z) * np.exp(-z)
    z = math.sqrt(5.0) * r / length
    return v * (1.0 + z + z * z / 3.0) * np.exp(-z)


def _cholesky_with_jitter(k: np.ndarray) -> np.ndarray:
    mean_diag = float(np.mean(np.diagonal(k)))
    if mean_diag <= 0.0:
        mean_diag = 1.0
    eye = np.eye(k.shape[0])
    for eps in (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6):
        try:
            return np.linalg.cholesky(k + eps * mean_diag * eye)
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefinite("covariance matrix is not positive definite after jitter")


def make_gaussian_process(
    n_samples: int,
    n_points: int,
    mean: float | np.ndarray = 0.0,
    cov: CovarianceKernelSpec | None = None,
    seed: int = 0,
) -> DiscreteFunctionalSample:
    """Trajectories of a Gaussian process on n_points equispaced points in [0, 1]."""
    if n_samples < 1 or n_points < 1:
        raise ValueError("n_samples and n_points must be >= 1")
    spec = cov or CovarianceKernelSpec("brownian")
    grid = np.linspace(0.0, 1.0, n_points)
    k = kernel_matrix(spec, grid)
    chol = _cholesky_with_jitter(k)
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((n_samples, n_points)) @ chol.T
    mean_vec = np.broadcast_to(np.asarray(mean, dtype=float), (n_points,))
    return build_discrete_sample(grid, draws + mean_vec, name=f"gp-{spec.kind}")


def make_multimodal_samples(
    n_samples: int,
    n_modes: int = 2,
    noise_sd: float = 0.0,
    seed: int = 0,
    n_points: int = 100,
    location_jitter: float = 0.05,
    width: float = 0.05,
) -> DiscreteFunctionalSample:
    """Curves built as sums of unit-height Gaussian bumps on [0, 1].

    Bump centers sit near equispaced anchors, jittered per curve with
    standard deviation ``location_jitter`` (domain fractions); ``width`` is
    the bump standard deviation.  White noise of sd ``noise_sd`` is added
    pointwise when positive.
    """
    if n_samples < 1 or n_modes < 1:
        raise ValueError("n_samples and n_modes must be >= 1")
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, n_points)
    anchors = (np.arange(n_modes) + 0.5) / n_modes
    centers = anchors[None, :] + rng.normal(0.0, location_jitter, (n_samples, n_modes))
    bumps = np.exp(
        -((grid[None, None, :] - centers[:, :, None]) ** 2) / (2.0 * width**2)
    )
    values = bumps.sum(axis=1)
    if noise_sd > 0:
        values = values + rng.normal(0.0, noise_sd, values.shape)
    return build_discrete_sample(grid, values, name="multimodal")

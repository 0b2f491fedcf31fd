"""Acceptance suite: one test per release criterion, each printing a
[PASS]/[FAIL] line (run with ``pytest tests/test_acceptance.py -s``).

Every tolerance and runtime budget is pinned here; nothing is deferred to
later calibration.
"""

import json
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest
from fastapi.testclient import TestClient

import fda_kit as fk
from fda_kit.cli import main as cli_main
from fda_kit.service import create_app

from conftest import DEMO_POINTS, DEMO_VALUES
from oracles import band_depths_bruteforce, distance_correlation_bruteforce, \
    greedy_mrmr_bruteforce, greedy_rkhs_bruteforce


@contextmanager
def criterion(name: str, budget_seconds: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}", file=sys.stderr)
        raise
    elapsed = time.perf_counter() - start
    if elapsed > budget_seconds:
        print(f"[FAIL] {name} (runtime {elapsed:.2f}s > {budget_seconds}s)",
              file=sys.stderr)
        raise AssertionError(f"runtime budget exceeded: {elapsed:.2f}s")
    print(f"[PASS] {name} ({elapsed:.2f}s)", file=sys.stderr)


def demo_sample():
    return fk.build_discrete_sample(DEMO_POINTS, DEMO_VALUES, name="demo")


def test_representation_round_trip(tmp_path):
    with criterion("representation round-trip", budget_seconds=1.0):
        sample = demo_sample()
        path = tmp_path / "demo.csv"
        fk.write_csv(sample, path)
        back = fk.read_csv(path)
        assert np.array_equal(back.grid.points, sample.grid.points)
        assert np.array_equal(back.evaluate(back.grid.points), sample.values)
        assert abs(back.evaluate(0.2)[0, 0] - 118.85) <= 1e-12


def test_smoothing_hat_matrices_and_scores():
    with criterion("smoothing: hat matrices and validation scores", 5.0):
        rng = np.random.default_rng(0)
        kernels = ["gaussian", "uniform", "epanechnikov"]
        for case in range(100):
            m = int(rng.integers(3, 25))
            pts = np.sort(rng.uniform(0, 1, m))
            grid = fk.Grid(pts)
            kind = case % 3
            if kind == 0:
                spec = fk.NadarayaWatson(
                    float(rng.uniform(0.2, 2.0)), fk.KernelSpec(kernels[case % len(kernels)])
                )
            elif kind == 1:
                spec = fk.LocalLinearRegression(
                    float(rng.uniform(0.3, 2.0)), fk.KernelSpec("gaussian")
                )
            else:
                spec = fk.KNeighbors(int(rng.integers(1, m + 1)))
            hat = fk.hat_matrix(spec, grid)
            assert np.abs(hat.entries.sum(axis=1) - 1.0).max() <= 1e-10

        toy_grid = fk.Grid(np.array([0.0, 1.0, 2.0]))
        assert np.array_equal(fk.hat_matrix(fk.KNeighbors(1), toy_grid).entries,
                              np.eye(3))

        toy = fk.build_discrete_sample([0.0, 1.0, 2.0], [[0.0, 1.0, 0.0]])
        hat = fk.hat_matrix(
            fk.NadarayaWatson(1.5, fk.KernelSpec("uniform")), toy.grid
        )
        # Hand values: deflated residuals are all 1, so LOO = 1; GCV with the
        # default penalty is (81/25) * (17/54) = 1.02.
        assert abs(fk.loo_cv_score(hat, toy) - 1.0) <= 1e-12
        assert abs(fk.gcv_score(hat, toy) - 1.02) <= 1e-12


def test_regularization_monotonicity():
    with criterion("regularization: roughness nonincreasing in lambda", 10.0):
        sample = fk.make_gaussian_process(
            5, 100, 0.0,
            fk.CovarianceKernelSpec("gaussian", length_scale=0.05), seed=1,
        )
        noisy = fk.build_discrete_sample(
            sample.grid.points,
            sample.values
            + np.random.default_rng(2).normal(0, 0.2, sample.values.shape),
        )
        basis = fk.BasisSpec("bspline", 40, noisy.domain_range)
        op = fk.LinearDifferentialOperatorSpec.derivative(2)
        r = fk.penalty_matrix(basis, op, noisy.grid.points)
        roughness = []
        for lam in (0.0, 1.0, 10.0):
            fit = fk.penalized_basis_fit(noisy, basis, lam, op)
            roughness.append(
                float(np.einsum("ij,jk,ik->", fit.coefficients, r, fit.coefficients))
            )
        assert roughness[0] >= roughness[1] >= roughness[2]


def test_registration_elastic_alignment():
    with criterion("registration: elastic alignment and planted warp", 60.0):
        sample = fk.make_multimodal_samples(15, 2, 0.0, seed=0, n_points=100)

        def mean_pairwise(s):
            w = fk.trapezoid_weights(s.grid.points)
            total, count = 0.0, 0
            for i in range(s.n_samples - 1):
                for j in range(i + 1, s.n_samples):
                    total += float(
                        np.sqrt(((s.values[i] - s.values[j]) ** 2) @ w)
                    )
                    count += 1
            return total / count

        result = fk.elastic_register(sample)
        before, after = mean_pairwise(sample), mean_pairwise(result.registered)
        assert after <= 0.2 * before  # distance reduced by at least 80%

        warp = result.warping.functions.values
        pts = sample.grid.points
        assert np.all(warp[:, 0] == pts[0]) and np.all(warp[:, -1] == pts[-1])
        assert (np.diff(warp, axis=1) / np.diff(pts)).min() > 0.0

        gamma0 = pts + 0.1 * np.sin(np.pi * pts)
        x = fk.build_discrete_sample(pts, [np.sin(2 * np.pi * pts) + pts])
        moving = fk.build_discrete_sample(pts, x.evaluate(gamma0))
        dp = fk.dp_align(fk.srvf_transform(moving), fk.srvf_transform(x))
        gamma_inverse = np.interp(pts, gamma0, pts)
        step = pts[1] - pts[0]
        assert np.abs(
            dp.warping.functions.values[0] - gamma_inverse
        ).max() <= 2 * step


def test_fpca_identities():
    with criterion("FPCA identities", 5.0):
        sample = fk.make_gaussian_process(
            100, 100, 0.0,
            fk.CovarianceKernelSpec("gaussian", length_scale=0.2), seed=3,
        )
        model = fk.fpca_fit(sample, 10)
        w = model.quadrature_weights
        gram = (model.components * w) @ model.components.T
        assert np.abs(gram - np.eye(10)).max() <= 1e-6
        assert np.all(np.diff(model.eigenvalues) <= 1e-12)

        full = fk.fpca_fit(sample, min(sample.n_samples - 1, sample.n_points))
        total = full.eigenvalues.sum()
        integral = float(sample.values.var(axis=0, ddof=1) @ w)
        assert abs(total - integral) <= 1e-6 * integral

        scores = fk.fpca_transform(model, sample)
        cov = np.cov(scores, rowvar=False, ddof=1)
        scale = model.eigenvalues[0]
        assert np.abs(np.diag(cov) - model.eigenvalues).max() <= 1e-6 * scale
        assert np.abs(cov - np.diag(np.diag(cov))).max() <= 1e-6 * scale

        pts = sample.grid.points
        direction = np.sin(2 * np.pi * pts)
        direction /= np.sqrt((direction**2) @ w)
        rank1 = fk.build_discrete_sample(
            pts, np.outer(np.random.default_rng(4).normal(0, 2, 40), direction)
        )
        m1 = fk.fpca_fit(rank1, 1)
        assert abs((m1.components[0] * w) @ direction) >= 0.999


def test_depths_match_oracle_exactly():
    with criterion("depths: brute-force oracle equality", 10.0):
        rng = np.random.default_rng(5)
        for case in range(200):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(2, 9))
            pts = np.sort(rng.uniform(0, 1, m))
            values = rng.normal(size=(n, m))
            if case % 5 == 0 and n >= 2:
                values[0] = values[1]  # exercise ties and closed bands
            sample = fk.build_discrete_sample(pts, values)
            bd_expected, mbd_expected = band_depths_bruteforce(values, pts)
            assert fk.band_depth(sample).values.tolist() == bd_expected.tolist()
            assert (
                fk.modified_band_depth(sample).values.tolist()
                == mbd_expected.tolist()
            )

        four = fk.build_discrete_sample(
            [0.0, 1.0], [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]
        )
        assert np.abs(
            fk.fraiman_muniz_depth(four).values - [0.75, 1.0, 0.75, 0.5]
        ).max() <= 1e-12
        one = fk.build_discrete_sample([0.0, 1.0], [[5.0, 5.0]])
        assert abs(fk.fraiman_muniz_depth(one).values[0] - 0.5) <= 1e-12


def test_outlier_detectors():
    with criterion("outlier detectors: constructed outliers and parabola", 10.0):
        pts = np.linspace(0, 1, 40)
        base = np.sin(2 * np.pi * pts)
        levels = np.linspace(-0.4, 0.4, 9)[:, None]

        # Magnitude outlier: a large constant offset.
        magnitude = fk.build_discrete_sample(
            pts, np.vstack([base + levels, base + 5.0])
        )
        box = fk.boxplot_stats(magnitude, factor=1.5)
        assert box.outlier_flags.tolist() == [False] * 9 + [True]
        ms = fk.msplot_stats(magnitude)
        assert int(np.argmax(np.abs(ms.mo))) == 9
        assert ms.outlier_flags[9]

        # Shape outlier: zero-mean sign-flipping deviation.
        flip = base + 0.8 * np.sin(20 * np.pi * pts)
        shape = fk.build_discrete_sample(pts, np.vstack([base + levels, flip]))
        ms2 = fk.msplot_stats(shape)
        assert int(np.argmax(ms2.vo)) == 9
        assert ms2.outlier_flags[9]
        og = fk.outliergram_stats(shape)
        assert int(np.argmax(og.distances)) == 9
        assert og.outlier_flags[9]

        # Mutually non-crossing curves sit on the parabola.
        crossing_free = fk.build_discrete_sample(pts, base + levels)
        og2 = fk.outliergram_stats(crossing_free)
        assert np.abs(og2.distances).max() <= 1e-8


def test_variable_selection():
    with criterion("variable selection: oracles and recoveries", 30.0):
        rng = np.random.default_rng(6)
        n = 30
        y = np.repeat([0, 1], n // 2)
        base = rng.normal(size=n)
        values = np.column_stack(
            [
                base + 1.5 * y,
                base + 1.5 * y + rng.normal(0, 0.1, n),
                rng.normal(size=n) + 1.0 * y,
            ]
            + [rng.normal(size=n) for _ in range(5)]
        )
        sample = fk.build_discrete_sample(np.linspace(0, 1, 8), values)

        # d = 1 RKHS equals the exhaustive scan of the univariate criterion.
        result = fk.rkhs_variable_selection(sample, y, 1)
        g0, g1 = values[y == 0], values[y == 1]
        pooled = (
            (g0.shape[0] - 1) * np.cov(g0, rowvar=False, ddof=1)
            + (g1.shape[0] - 1) * np.cov(g1, rowvar=False, ddof=1)
        ) / (n - 2)
        delta = g1.mean(axis=0) - g0.mean(axis=0)
        scan = delta**2 / (np.diag(pooled) * (1 + 1e-10))
        assert result.selected_indices[0] == int(np.argmax(scan))

        # Greedy oracles on the 8-point grid.
        rkhs = fk.rkhs_variable_selection(sample, y, 3)
        expected_rkhs, _ = greedy_rkhs_bruteforce(values, y, 3)
        assert rkhs.selected_indices.tolist() == expected_rkhs
        mrmr = fk.mrmr_select(sample, y, 3)
        expected_mrmr = greedy_mrmr_bruteforce(
            values, fk.labels_to_onehot(y), 3, fk.distance_correlation
        )
        assert mrmr.selected_indices.tolist() == expected_mrmr

        # RMH: the correction wipes out covariance with the selected point.
        rmh = fk.recursive_maxima_hunting(sample, y, 1, dependence_threshold=0.05)
        j = rmh.selected_indices[0]
        cov = np.cov(values, rowvar=False, ddof=1)
        corrected = values - np.outer(values[:, j], cov[:, j] / cov[j, j])
        cross = (
            (corrected - corrected.mean(axis=0)).T
            @ (values - values.mean(axis=0))[:, j]
        ) / (n - 1)
        assert np.abs(cross).max() <= 1e-10

        # MH recovers a planted two-bump relevance pattern.
        m = 41
        pts = np.linspace(0, 1, m)
        nn = 80
        yy = np.repeat([0, 1], nn // 2)
        noise = rng.normal(0, 0.15, (nn, m)).cumsum(axis=1) * 0.2
        bumps = np.exp(-((pts - 0.25) ** 2) / 0.002) + np.exp(
            -((pts - 0.75) ** 2) / 0.002
        )
        mh_sample = fk.build_discrete_sample(pts, noise + np.outer(yy, bumps))
        mh = fk.maxima_hunting(mh_sample, yy, n_features=2, window=3)
        chosen = np.sort(mh.selected_points)
        step = pts[1] - pts[0]
        assert abs(chosen[0] - 0.25) <= 2 * step
        assert abs(chosen[1] - 0.75) <= 2 * step


def test_distance_correlation_oracle():
    with criterion("distance correlation: definitional oracle", 10.0):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(3, 10))
            x = rng.normal(size=n)
            y = rng.normal(size=n) + rng.uniform(-1, 1) * x
            assert abs(
                fk.distance_correlation(x, y) - distance_correlation_bruteforce(x, y)
            ) <= 1e-12
        x = rng.normal(size=12)
        assert abs(fk.distance_correlation(x, x) - 1.0) <= 1e-12


def test_simulation_determinism_and_variance():
    with criterion("simulation: Brownian variance band and determinism", 5.0):
        sample = fk.make_gaussian_process(
            50, 100, 0.0, fk.CovarianceKernelSpec("brownian"), seed=0
        )
        var = float(np.var(sample.values[:, -1], ddof=1))
        assert 0.6 <= var <= 1.5
        again = fk.make_gaussian_process(
            50, 100, 0.0, fk.CovarianceKernelSpec("brownian"), seed=0
        )
        assert np.array_equal(sample.values, again.values)
        multimodal_a = fk.make_multimodal_samples(15, 2, 0.1, seed=0)
        multimodal_b = fk.make_multimodal_samples(15, 2, 0.1, seed=0)
        assert np.array_equal(multimodal_a.values, multimodal_b.values)
        assert not np.array_equal(
            fk.make_gaussian_process(5, 20, seed=1).values,
            fk.make_gaussian_process(5, 20, seed=2).values,
        )


def test_cli_and_service_equivalence(tmp_path):
    with criterion("CLI and service equal the library bit for bit", 10.0):
        sample = demo_sample()
        expected = fk.modified_band_depth(sample).values.tolist()

        csv_path = tmp_path / "demo.csv"
        fk.write_csv(sample, csv_path)
        out_path = tmp_path / "depth.json"
        rc = cli_main(
            ["depth", "--input", str(csv_path), "--method", "mbd",
             "--out", str(out_path)]
        )
        assert rc == 0
        assert json.loads(out_path.read_text())["values"] == expected

        client = TestClient(create_app())
        dataset_id = client.post(
            "/datasets", json=fk.to_jsonable(sample)
        ).json()["id"]
        body = client.post(
            f"/analyses/{dataset_id}/depth", json={"method": "mbd"}
        ).json()
        assert body["values"] == expected

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fda_kit import (
    BasisFunctionalSample,
    BasisSpec,
    build_discrete_sample,
    coefficient_features,
    distance_correlation,
    evaluation_features,
    fpca_fit,
    fpca_inverse,
    fpca_transform,
    maxima_hunting,
    mrmr_select,
    recursive_maxima_hunting,
    rkhs_variable_selection,
    trapezoid_weights,
)
from fda_kit.errors import DegenerateSample, GridMismatch, TooManyComponents
from fda_kit.simulate import CovarianceKernelSpec, make_gaussian_process

from conftest import DEMO_POINTS, DEMO_VALUES
from oracles import (
    distance_correlation_bruteforce,
    greedy_mrmr_bruteforce,
    greedy_rkhs_bruteforce,
)


@pytest.fixture(scope="module")
def gp_sample():
    return make_gaussian_process(
        60, 50, 0.0, CovarianceKernelSpec("gaussian", length_scale=0.2), seed=4
    )


class TestFpca:
    def test_zero_variance_data(self):
        # Four identical curves: centering is exact (n is a power of two).
        pts = np.linspace(0, 1, 20)
        sample = build_discrete_sample(pts, np.tile(np.sin(pts), (4, 1)))
        model = fpca_fit(sample, 2)
        assert np.all(model.eigenvalues == 0.0)
        assert np.abs(fpca_transform(model, sample)).max() <= 1e-10

    def test_rank_one_recovery(self):
        pts = np.linspace(0, 1, 60)
        w = trapezoid_weights(pts)
        direction = np.sin(2 * np.pi * pts)
        direction = direction / np.sqrt((direction**2) @ w)
        rng = np.random.default_rng(9)
        scores = rng.normal(0, 2, 30)
        sample = build_discrete_sample(pts, np.outer(scores, direction))
        model = fpca_fit(sample, 2)
        cosine = abs((model.components[0] * w) @ direction)
        assert cosine >= 0.999
        assert model.eigenvalues[1] <= 1e-8 * model.eigenvalues[0]
        got = fpca_transform(model, sample)[:, 0]
        corr = abs(np.corrcoef(got, scores)[0, 1])
        assert corr >= 0.999

    def test_two_curve_closed_form(self):
        pts = np.linspace(0, 1, 40)
        w = trapezoid_weights(pts)
        x1 = np.sin(2 * np.pi * pts)
        x2 = np.cos(2 * np.pi * pts)
        sample = build_discrete_sample(pts, np.vstack([x1, x2]))
        model = fpca_fit(sample, 1)
        mu = (x1 + x2) / 2.0
        expected = (((x1 - mu) ** 2) @ w) + (((x2 - mu) ** 2) @ w)  # ddof = 1
        assert model.eigenvalues[0] == pytest.approx(expected, rel=1e-10)

    def test_orthonormality_and_ordering(self, gp_sample):
        model = fpca_fit(gp_sample, 6)
        gram = (model.components * model.quadrature_weights) @ model.components.T
        assert np.abs(gram - np.eye(6)).max() <= 1e-6
        assert np.all(np.diff(model.eigenvalues) <= 1e-12)

    def test_total_variance_identity(self, gp_sample):
        full = fpca_fit(gp_sample, min(gp_sample.n_samples - 1, gp_sample.n_points))
        w = full.quadrature_weights
        pointwise_var = gp_sample.values.var(axis=0, ddof=1)
        assert full.eigenvalues.sum() == pytest.approx(
            float(pointwise_var @ w), rel=1e-6
        )

    def test_score_covariance_is_diagonal(self, gp_sample):
        model = fpca_fit(gp_sample, 5)
        scores = fpca_transform(model, gp_sample)
        cov = np.cov(scores, rowvar=False, ddof=1)
        scale = model.eigenvalues[0]
        assert np.abs(np.diag(cov) - model.eigenvalues).max() <= 1e-6 * scale
        assert np.abs(cov - np.diag(np.diag(cov))).max() <= 1e-6 * scale

    def test_transform_of_mean_is_zero(self, gp_sample):
        model = fpca_fit(gp_sample, 3)
        mean_sample = build_discrete_sample(
            gp_sample.grid.points, model.mean[None, :]
        )
        assert np.abs(fpca_transform(model, mean_sample)).max() <= 1e-10

    def test_inverse_of_zero_scores_is_mean(self, gp_sample):
        model = fpca_fit(gp_sample, 3)
        out = fpca_inverse(model, np.zeros((1, 3)))
        assert np.array_equal(out.values[0], model.mean)

    def test_projection_residual_orthogonal(self, gp_sample):
        j = min(gp_sample.n_samples - 1, gp_sample.n_points)
        model = fpca_fit(gp_sample, j)
        scores = fpca_transform(model, gp_sample)
        recon = fpca_inverse(model, scores)
        residual = gp_sample.values - recon.values
        proj = (residual * model.quadrature_weights) @ model.components.T
        assert np.abs(proj).max() <= 1e-6

    def test_perturbation_curves(self, gp_sample):
        model = fpca_fit(gp_sample, 2)
        c = 1.7
        plus = fpca_inverse(model, np.array([[c, 0.0]]))
        minus = fpca_inverse(model, np.array([[-c, 0.0]]))
        assert np.array_equal(plus.values[0], model.mean + c * model.components[0])
        assert np.array_equal(minus.values[0], model.mean - c * model.components[0])

    def test_too_many_components(self, gp_sample):
        with pytest.raises(TooManyComponents):
            fpca_fit(gp_sample, gp_sample.n_samples + 1)

    def test_grid_mismatch(self, gp_sample):
        model = fpca_fit(gp_sample, 2)
        other = build_discrete_sample(
            np.linspace(0, 1, 11), np.ones((1, 11))
        )
        with pytest.raises(GridMismatch):
            fpca_transform(model, other)

    def test_smoothed_components_are_smoother(self, gp_sample):
        rough = fpca_fit(gp_sample, 2)
        smooth = fpca_fit(gp_sample, 2, lam=1e-3)
        pts = gp_sample.grid.points

        def roughness(components):
            sample = build_discrete_sample(pts, components)
            second = sample.derivative(2).values
            return float((second**2).sum())

        assert roughness(smooth.components) <= roughness(rough.components)
        norms = (smooth.components**2) @ smooth.quadrature_weights
        assert np.allclose(norms, 1.0, atol=1e-8)


class TestFeatureExtraction:
    def test_full_grid_evaluation_is_identity(self, demo_sample):
        feats = evaluation_features(demo_sample, DEMO_POINTS)
        assert np.array_equal(feats, demo_sample.values)

    def test_demo_boundary_columns(self, demo_sample):
        feats = evaluation_features(demo_sample, [0.0, 1.0])
        assert feats[:, 0].tolist() == [109.5, 104.6, 100.4]
        assert feats[:, 1].tolist() == [141.1, 133.0, 126.5]

    def test_constant_basis_coefficients(self):
        sample = BasisFunctionalSample(
            BasisSpec("constant", 1), [[2.0], [3.0], [4.0]]
        )
        assert coefficient_features(sample).ravel().tolist() == [2.0, 3.0, 4.0]


class TestDistanceCorrelation:
    def test_self_dependence(self):
        x = np.array([3.0, 1.0, 4.0, 1.5, 5.0])
        assert distance_correlation(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_linear_map(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        assert distance_correlation(x, 2.0 * x) == pytest.approx(1.0, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateSample):
            distance_correlation(np.ones(4), np.array([1.0, 2.0, 3.0, 4.0]))

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=8)
        y = x**2 + rng.normal(0, 0.1, 8)
        assert distance_correlation(x, y) == pytest.approx(
            distance_correlation_bruteforce(x, y), abs=1e-12
        )

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_affine_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=7)
        y = rng.normal(size=7)
        base = distance_correlation(x, y)
        mapped = distance_correlation(2.5 * x - 1.0, 0.3 * y + 4.0)
        assert mapped == pytest.approx(base, abs=1e-10)

    def test_label_embedding(self):
        x = np.array([0.0, 0.1, 1.0, 1.1])
        labels = np.array(["a", "a", "b", "b"])
        numeric = np.array([0.0, 0.0, 1.0, 1.0])
        got = distance_correlation(x, labels)
        # One-hot distances are sqrt(2) * Hamming; dcor is scale invariant.
        assert got == pytest.approx(distance_correlation(x, numeric), abs=1e-12)


def two_class_toy(seed=0, n=30):
    """Two informative correlated points (0, 1) + one independent point (4)."""
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    base = rng.normal(size=n)
    col0 = base + 1.5 * y
    col1 = base + 1.5 * y + rng.normal(0, 0.1, n)
    col2 = rng.normal(size=n) + 1.0 * y
    noise = [rng.normal(size=n) for _ in range(5)]
    values = np.column_stack([col0, col1, col2] + noise)
    pts = np.linspace(0, 1, values.shape[1])
    return build_discrete_sample(pts, values), y


class TestMrmr:
    def test_single_feature_is_most_relevant(self):
        sample, y = two_class_toy()
        result = mrmr_select(sample, y, 1)
        rel = [
            distance_correlation(sample.values[:, j], np.column_stack([y == 0, y == 1]).astype(float))
            for j in range(sample.n_points)
        ]
        assert result.selected_indices[0] == int(np.argmax(rel))

    def test_duplicate_column_not_selected_twice_in_a_row(self):
        rng = np.random.default_rng(3)
        n = 24
        y = np.repeat([0, 1], n // 2)
        informative = rng.normal(size=n) + 2.0 * y
        other = rng.normal(size=n) + 1.0 * y
        values = np.column_stack([informative, informative, other])
        sample = build_discrete_sample([0.0, 0.5, 1.0], values)
        result = mrmr_select(sample, y, 2)
        assert result.selected_indices[0] == 0  # duplicate at index 1 ties; 0 wins
        assert result.selected_indices[1] == 2

    def test_matches_bruteforce_greedy(self):
        sample, y = two_class_toy(seed=7)
        result = mrmr_select(sample, y, 3)
        from fda_kit import labels_to_onehot

        expected = greedy_mrmr_bruteforce(
            sample.values, labels_to_onehot(y), 3, distance_correlation
        )
        assert result.selected_indices.tolist() == expected

    def test_relabeling_invariance(self):
        sample, y = two_class_toy(seed=5)
        flipped = 1 - y
        a = mrmr_select(sample, y, 3)
        b = mrmr_select(sample, flipped, 3)
        assert a.selected_indices.tolist() == b.selected_indices.tolist()


class TestRkhs:
    def test_d1_matches_exhaustive_scan(self):
        sample, y = two_class_toy(seed=2)
        result = rkhs_variable_selection(sample, y, 1)
        values = sample.values
        mu0 = values[y == 0].mean(axis=0)
        mu1 = values[y == 1].mean(axis=0)
        from oracles import greedy_rkhs_bruteforce

        pooled_scan = []
        g0, g1 = values[y == 0], values[y == 1]
        pooled = (
            (g0.shape[0] - 1) * np.cov(g0, rowvar=False, ddof=1)
            + (g1.shape[0] - 1) * np.cov(g1, rowvar=False, ddof=1)
        ) / (values.shape[0] - 2)
        for j in range(values.shape[1]):
            kjj = pooled[j, j] * (1 + 1e-10)
            pooled_scan.append((mu1[j] - mu0[j]) ** 2 / kjj)
        assert result.selected_indices[0] == int(np.argmax(pooled_scan))

    def test_identical_means_tie_to_first_index(self):
        # Class 1 duplicates class 0 curve for curve, so the class-mean
        # difference vanishes at every point and every criterion ties at 0.
        rng = np.random.default_rng(1)
        half = rng.normal(size=(10, 3))
        values = np.vstack([half, half])
        y = np.repeat([0, 1], 10)
        sample = build_discrete_sample([0.0, 0.5, 1.0], values)
        result = rkhs_variable_selection(sample, y, 1)
        assert result.selected_indices[0] == 0
        assert result.scores[0] == pytest.approx(0.0, abs=1e-12)

    def test_matches_bruteforce_greedy_on_8_points(self):
        sample, y = two_class_toy(seed=11)
        result = rkhs_variable_selection(sample, y, 2)
        expected, expected_scores = greedy_rkhs_bruteforce(sample.values, y, 2)
        assert result.selected_indices.tolist() == expected
        assert np.allclose(result.scores, expected_scores, rtol=1e-10)

    def test_criterion_nondecreasing(self):
        sample, y = two_class_toy(seed=13)
        result = rkhs_variable_selection(sample, y, 4)
        assert all(
            b >= a - 1e-9 for a, b in zip(result.scores, result.scores[1:])
        )

    def test_two_class_requirement(self):
        sample, y = two_class_toy()
        with pytest.raises(ValueError):
            rkhs_variable_selection(sample, np.zeros_like(y), 1)


def bump_relevance_sample(seed=0, n=60, m=50):
    """Class signal at t=0.25 and t=0.75 on top of Brownian-ish noise."""
    rng = np.random.default_rng(seed)
    pts = np.linspace(0, 1, m)
    y = np.repeat([0, 1], n // 2)
    noise = rng.normal(0, 0.15, (n, m)).cumsum(axis=1) * 0.2
    bumps = np.exp(-((pts - 0.25) ** 2) / 0.002) + np.exp(
        -((pts - 0.75) ** 2) / 0.002
    )
    values = noise + np.outer(y, bumps)
    return build_discrete_sample(pts, values), y, pts


class TestMaximaHunting:
    def test_single_peak(self):
        sample, y, pts = bump_relevance_sample()
        result = maxima_hunting(sample, y, n_features=2, window=3)
        chosen = np.sort(result.selected_points)
        step = pts[1] - pts[0]
        assert abs(chosen[0] - 0.25) <= 2 * step
        assert abs(chosen[1] - 0.75) <= 2 * step

    def test_scores_sorted_descending(self):
        sample, y, _ = bump_relevance_sample(seed=3)
        result = maxima_hunting(sample, y)
        assert all(a >= b for a, b in zip(result.scores, result.scores[1:]))

    def test_monotone_relevance_keeps_boundary_max(self):
        rng = np.random.default_rng(4)
        n = 40
        y = np.repeat([0, 1], n // 2)
        pts = np.linspace(0, 1, 10)
        # Signal strength grows along the grid: relevance is monotone.
        values = rng.normal(0, 0.2, (n, 10)) + np.outer(y, pts**2)
        sample = build_discrete_sample(pts, values)
        result = maxima_hunting(sample, y, window=1)
        assert result.selected_indices[0] == 9

    def test_relabeling_invariance(self):
        sample, y, _ = bump_relevance_sample(seed=6)
        a = maxima_hunting(sample, y, n_features=2)
        b = maxima_hunting(sample, 1 - y, n_features=2)
        assert a.selected_indices.tolist() == b.selected_indices.tolist()


class TestRecursiveMaximaHunting:
    def test_correction_kills_covariance(self):
        sample, y, _ = bump_relevance_sample(seed=8)
        result = recursive_maxima_hunting(sample, y, max_features=1,
                                          dependence_threshold=0.05)
        j = result.selected_indices[0]
        original = sample.values
        cov = np.cov(original, rowvar=False, ddof=1)
        beta = cov[:, j] / cov[j, j]
        corrected = original - np.outer(original[:, j], beta)
        centered_c = corrected - corrected.mean(axis=0)
        centered_o = original - original.mean(axis=0)
        cross = centered_c.T @ centered_o[:, j] / (original.shape[0] - 1)
        assert np.abs(cross).max() <= 1e-10

    def test_max_features_one_equals_mh_top_point(self):
        sample, y, _ = bump_relevance_sample(seed=9)
        mh = maxima_hunting(sample, y, n_features=1)
        rmh = recursive_maxima_hunting(sample, y, max_features=1,
                                       dependence_threshold=0.01)
        assert rmh.selected_indices[0] == mh.selected_indices[0]

    def test_two_independent_informative_locations_recovered(self):
        rng = np.random.default_rng(10)
        n, m = 80, 41
        pts = np.linspace(0, 1, m)
        y = np.repeat([0, 1], n // 2)
        z1 = 1.5 * y + rng.normal(0, 0.3, n)
        z2 = 1.5 * y + rng.normal(0, 0.3, n)
        g1 = np.exp(-((pts - 0.25) ** 2) / 0.001)
        g2 = np.exp(-((pts - 0.75) ** 2) / 0.001)
        values = np.outer(z1, g1) + np.outer(z2, g2) + rng.normal(0, 0.01, (n, m))
        sample = build_discrete_sample(pts, values)
        result = recursive_maxima_hunting(sample, y, max_features=2,
                                          dependence_threshold=0.15)
        assert len(result.selected_indices) == 2
        points = np.sort(result.selected_points)
        step = pts[1] - pts[0]
        assert abs(points[0] - 0.25) <= 2 * step
        assert abs(points[1] - 0.75) <= 2 * step

    def test_second_pick_differs_from_mh_when_signals_are_correlated(self):
        # One shared class variable drives both bumps: MH reports both local
        # maxima, while RMH's correction removes the second bump's information
        # after the first pick.
        rng = np.random.default_rng(10)
        n, m = 80, 41
        pts = np.linspace(0, 1, m)
        y = np.repeat([0, 1], n // 2)
        z = 1.5 * y + rng.normal(0, 0.3, n)
        g1 = np.exp(-((pts - 0.25) ** 2) / 0.001)
        g2 = np.exp(-((pts - 0.75) ** 2) / 0.001)
        values = np.outer(z, g1) + np.outer(z, g2) + rng.normal(0, 0.01, (n, m))
        sample = build_discrete_sample(pts, values)
        mh = maxima_hunting(sample, y, n_features=2, window=3)
        rmh = recursive_maxima_hunting(sample, y, max_features=2,
                                       dependence_threshold=0.15)
        mh_points = np.sort(mh.selected_points)
        step = pts[1] - pts[0]
        assert abs(mh_points[0] - 0.25) <= 2 * step
        assert abs(mh_points[1] - 0.75) <= 2 * step
        other_bump = 1.0 - round(rmh.selected_points[0] * 2) / 2.0
        if len(rmh.selected_indices) > 1:
            assert abs(rmh.selected_points[1] - other_bump) > 2 * step
        assert rmh.selected_points.tolist() != mh_points.tolist()

    def test_threshold_stops_selection(self):
        from fda_kit.errors import NoMaximaFound

        rng = np.random.default_rng(20)
        n = 30
        y = np.repeat([0, 1], n // 2)
        pts = np.linspace(0, 1, 12)
        values = rng.normal(size=(n, 12))  # no signal at all
        sample = build_discrete_sample(pts, values)
        with pytest.raises(NoMaximaFound):
            recursive_maxima_hunting(sample, y, max_features=5,
                                     dependence_threshold=0.99)

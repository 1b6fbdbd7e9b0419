import numpy as np
import pytest

from defectpls.errors import (
    DegenerateDesignError,
    DimensionMismatchError,
    InvalidInputError,
    InvalidSpecError,
)
from defectpls.pls_core import FitOptions, fit, predict, scores


def ols_coefficients(X, y):
    """Independent oracle: least squares on centered data."""
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    return np.linalg.lstsq(Xc, yc, rcond=None)[0]


def random_instance(rng, n=None, m=None):
    n = n or int(rng.integers(10, 100))
    m = m or int(rng.integers(2, 20))
    X = rng.standard_normal((n, m))
    y = rng.standard_normal(n)
    return X, y


class TestFitBasics:
    def test_perfect_univariate_fit(self):
        rng = np.random.default_rng(1)
        y = rng.standard_normal(40)
        X = y.reshape(-1, 1).copy()
        model = fit(X, y, FitOptions(max_components=1))
        assert abs(model.B[0] - 1.0) < 1e-10
        assert np.abs(predict(model, X) - y).max() < 1e-10

    def test_constant_response(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((20, 3))
        model = fit(X, np.full(20, 4.25), FitOptions(max_components=2))
        assert model.n_components == 0
        assert np.array_equal(model.B, np.zeros(3))
        assert model.y_mean == 4.25

    def test_predict_at_column_means(self):
        rng = np.random.default_rng(3)
        X, y = random_instance(rng)
        model = fit(X, y, FitOptions(max_components=2))
        assert predict(model, model.x_mean.reshape(1, -1))[0] == model.y_mean

    def test_ols_limit_full_rank(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            X, y = random_instance(rng, n=30, m=5)
            model = fit(X, y, FitOptions(max_components=5))
            b = ols_coefficients(X, y)
            assert np.linalg.norm(model.B - b) <= 1e-8 * np.linalg.norm(b)

    def test_heldout_predictions_match_ols(self):
        rng = np.random.default_rng(5)
        X, y = random_instance(rng, n=60, m=6)
        beta = rng.standard_normal(6)
        y = X @ beta + 0.01 * rng.standard_normal(60)
        model = fit(X[:40], y[:40], FitOptions(max_components=6))
        b = ols_coefficients(X[:40], y[:40])
        expected = (X[40:] - X[:40].mean(axis=0)) @ b + y[:40].mean()
        got = predict(model, X[40:])
        assert np.abs(got - expected).max() <= 1e-8 * max(1.0, np.abs(expected).max())


class TestOracleEquivalence:
    def test_bidiag_matches_nipals(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            X, y = random_instance(rng)
            l = int(min(rng.integers(1, 11), X.shape[1], X.shape[0] - 1))
            mb = fit(X, y, FitOptions(max_components=l, algorithm="bidiag2stab"))
            mn = fit(X, y, FitOptions(max_components=l, algorithm="nipals"))
            assert mb.n_components == mn.n_components
            rel = np.linalg.norm(mb.B - mn.B) / np.linalg.norm(mn.B)
            assert rel <= 1e-6

    def test_scores_match_nipals_up_to_sign(self):
        rng = np.random.default_rng(7)
        X, y = random_instance(rng, n=20, m=5)
        opts = dict(max_components=5)
        mb = fit(X, y, FitOptions(algorithm="bidiag2stab", **opts))
        mn = fit(X, y, FitOptions(algorithm="nipals", **opts))
        tb = scores(mb, X)
        tn = scores(mn, X)
        for j in range(tb.shape[1]):
            direct = np.abs(tb[:, j] - tn[:, j]).max()
            flipped = np.abs(tb[:, j] + tn[:, j]).max()
            assert min(direct, flipped) <= 1e-6 * np.abs(tn[:, j]).max()

    def test_sign_convention_first_entry_positive(self):
        rng = np.random.default_rng(8)
        for algorithm in ("bidiag2stab", "nipals"):
            X, y = random_instance(rng, n=30, m=8)
            model = fit(X, y, FitOptions(max_components=4, algorithm=algorithm))
            for k in range(model.n_components):
                col = model.W[:, k]
                lead = col[np.abs(col) > 1e-12 * np.abs(col).max()][0]
                assert lead > 0


class TestScores:
    def test_single_column_scores_proportional_to_centered_input(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal(25)
        y = 2.0 * x + rng.standard_normal(25) * 0.1
        X = x.reshape(-1, 1)
        model = fit(X, y, FitOptions(max_components=1))
        t = scores(model, X)[:, 0]
        centered = x - x.mean()
        ratio = t[np.abs(centered) > 1e-6] / centered[np.abs(centered) > 1e-6]
        assert np.abs(ratio - ratio[0]).max() < 1e-10

    def test_training_scores_orthogonal(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            X, y = random_instance(rng)
            l = int(min(5, X.shape[1], X.shape[0] - 1))
            model = fit(X, y, FitOptions(max_components=l))
            T = scores(model, X)
            gram = T.T @ T
            off = np.abs(gram - np.diag(np.diag(gram))).max()
            assert off <= 1e-8 * np.linalg.norm(T) ** 2


class TestInvariances:
    def test_deterministic(self):
        rng = np.random.default_rng(11)
        X, y = random_instance(rng)
        m1 = fit(X, y, FitOptions(max_components=3))
        m2 = fit(X, y, FitOptions(max_components=3))
        assert np.array_equal(m1.B, m2.B)
        assert np.array_equal(m1.W, m2.W)

    def test_response_shift(self):
        rng = np.random.default_rng(12)
        X, y = random_instance(rng)
        m1 = fit(X, y, FitOptions(max_components=3))
        m2 = fit(X, y + 100.0, FitOptions(max_components=3))
        assert abs(m2.y_mean - m1.y_mean - 100.0) < 1e-9
        assert np.abs(m2.B - m1.B).max() < 1e-10

    def test_row_permutation(self):
        rng = np.random.default_rng(13)
        X, y = random_instance(rng)
        perm = rng.permutation(X.shape[0])
        m1 = fit(X, y, FitOptions(max_components=3))
        m2 = fit(X[perm], y[perm], FitOptions(max_components=3))
        assert np.abs(m2.B - m1.B).max() < 1e-10

    def test_truncated_coefficients_match_smaller_fit(self):
        rng = np.random.default_rng(14)
        X, y = random_instance(rng, n=40, m=8)
        big = fit(X, y, FitOptions(max_components=6))
        for l in range(1, 7):
            small = fit(X, y, FitOptions(max_components=l))
            assert np.abs(big.coefficients(l) - small.B).max() < 1e-9


class TestRankAndErrors:
    def test_early_stop_on_rank_deficiency(self):
        rng = np.random.default_rng(15)
        base = rng.standard_normal((30, 2))
        X = base @ rng.standard_normal((2, 6))  # rank 2
        y = rng.standard_normal(30)
        model = fit(X, y, FitOptions(max_components=5))
        assert model.n_components == 2
        b = ols_coefficients(X, y)
        expected = (X - X.mean(axis=0)) @ b + y.mean()
        assert np.abs(predict(model, X) - expected).max() < 1e-8

    def test_all_constant_design_rejected(self):
        X = np.ones((10, 3))
        with pytest.raises(DegenerateDesignError):
            fit(X, np.arange(10.0), FitOptions(max_components=2))

    def test_nan_rejected(self):
        X = np.ones((10, 2))
        X[0, 0] = np.nan
        with pytest.raises(InvalidInputError):
            fit(X, np.arange(10.0), FitOptions(max_components=1))

    def test_max_components_capped_by_shape(self):
        rng = np.random.default_rng(16)
        X, y = random_instance(rng, n=5, m=3)
        with pytest.raises(InvalidSpecError):
            fit(X, y, FitOptions(max_components=4))

    def test_predict_dimension_mismatch(self):
        rng = np.random.default_rng(17)
        X, y = random_instance(rng, n=20, m=4)
        model = fit(X, y, FitOptions(max_components=2))
        with pytest.raises(DimensionMismatchError):
            predict(model, np.ones((3, 5)))
        with pytest.raises(DimensionMismatchError):
            scores(model, np.ones((3, 5)))

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            fit(np.ones((5, 2)), np.ones(4), FitOptions(max_components=1))

import math

import numpy as np
import pytest

from advlin.core import Dataset
from advlin.designs import DesignSpec, generate, replicate_seed
from advlin.estimators import (
    LassoConfig,
    SparseCovConfig,
    lasso_cv,
    lasso_path,
    ols,
    pd_repair,
    sample_cov,
    scaled_identity_cov,
    sparse_cov,
    taper_weights,
)
from advlin.exceptions import ConfigurationError, RankError
from advlin.two_stage import excess_risk

from test_core import random_pd


class TestOls:
    def test_noiseless_recovery(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((40, 6))
        theta0 = rng.standard_normal(6)
        fs = ols(Dataset(x=x, y=x @ theta0))
        np.testing.assert_allclose(fs.theta0_hat, theta0, atol=1e-10)
        assert fs.noise_var_hat == pytest.approx(0.0, abs=1e-18)

    def test_tiny_hand_example(self):
        # p=1, x=(1,2), y=(2,4): theta = (1*2 + 2*4)/(1+4) = 2, cov = 5/2
        fs = ols(Dataset(x=np.array([[1.0], [2.0]]), y=np.array([2.0, 4.0])))
        assert fs.theta0_hat[0] == pytest.approx(2.0)
        assert fs.sigma_hat[0, 0] == pytest.approx(2.5)
        assert fs.noise_var_hat == pytest.approx(0.0, abs=1e-20)

    def test_normal_equations(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((60, 8))
        y = x @ rng.standard_normal(8) + rng.standard_normal(60)
        fs = ols(Dataset(x=x, y=y))
        resid = y - x @ fs.theta0_hat
        assert np.linalg.norm(x.T @ resid) <= 1e-8 * np.linalg.norm(x.T @ y)

    def test_risk_matches_classical_rate(self):
        # E||theta_hat - theta0||^2 ~ noise * tr(Sigma^{-1}) / n for big n
        rng = np.random.default_rng(2)
        p, n, reps = 10, 1000, 200
        sigma = random_pd(rng, p)
        theta0 = rng.standard_normal(p)
        chol = np.linalg.cholesky(sigma)
        errs = []
        for _ in range(reps):
            x = rng.standard_normal((n, p)) @ chol.T
            y = x @ theta0 + rng.standard_normal(n)
            errs.append(np.sum((ols(Dataset(x=x, y=y)).theta0_hat - theta0) ** 2))
        want = np.trace(np.linalg.inv(sigma)) / (n - p - 1)
        se = np.std(errs, ddof=1) / math.sqrt(reps)
        assert np.mean(errs) == pytest.approx(want, abs=3 * se)

    def test_underdetermined_rejected(self):
        rng = np.random.default_rng(3)
        with pytest.raises(RankError):
            ols(Dataset(x=rng.standard_normal((4, 6)), y=rng.standard_normal(4)))

    def test_unlabeled_rows_enter_covariance(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((30, 3))
        xu = rng.standard_normal((20, 3))
        y = x @ np.ones(3)
        fs = ols(Dataset(x=x, y=y, x_unlabeled=xu))
        np.testing.assert_allclose(fs.sigma_hat, sample_cov(np.vstack([x, xu])))


class TestSampleCov:
    def test_zero_matrix(self):
        np.testing.assert_array_equal(sample_cov(np.zeros((4, 3))), np.zeros((3, 3)))

    def test_single_row_outer_product(self):
        np.testing.assert_allclose(sample_cov(np.array([[1.0, 2.0]])),
                                   [[1.0, 2.0], [2.0, 4.0]])

    def test_concatenation_associativity(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((13, 4))
        b = rng.standard_normal((7, 4))
        np.testing.assert_allclose(
            sample_cov(np.vstack([a, b])),
            (13 * sample_cov(a) + 7 * sample_cov(b)) / 20, rtol=1e-12)

    def test_wishart_moment_band(self):
        rng = np.random.default_rng(6)
        n = 10_000
        x = rng.standard_normal((n, 2)) @ np.diag([1.0, math.sqrt(2.0)])
        cov = sample_cov(x)
        for i, vii in enumerate((1.0, 2.0)):
            assert abs(cov[i, i] - vii) <= 3 * math.sqrt(2 * vii**2 / n)

    def test_centering_flag(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((50, 3)) + 5.0
        centered = sample_cov(x, center=True)
        assert np.max(np.abs(centered)) < 2.0  # the mean offset is gone


class TestLasso:
    def test_lambda_max_kills_all_coefficients(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((50, 7))
        y = x @ rng.standard_normal(7) + rng.standard_normal(50)
        xs = x / np.sqrt(np.mean(x * x, axis=0))
        lam_max = float(np.max(np.abs(xs.T @ y))) / 50
        coefs = lasso_path(x, y, np.array([lam_max * (1 + 1e-12)]))
        assert np.all(coefs == 0.0)

    def test_orthonormal_design_soft_threshold(self):
        # X'X/n = I makes each coordinate an independent soft-threshold
        rng = np.random.default_rng(9)
        n, p = 200, 5
        x, _ = np.linalg.qr(rng.standard_normal((n, p)))
        x *= math.sqrt(n)
        y = x @ np.array([2.0, -1.0, 0.5, 0.0, 0.05]) + 0.1 * rng.standard_normal(n)
        corr = x.T @ y / n
        for lam in (0.02, 0.3, 1.0):
            got = lasso_path(x, y, np.array([lam]), LassoConfig(standardize=False))[0]
            want = np.sign(corr) * np.maximum(np.abs(corr) - lam, 0.0)
            np.testing.assert_allclose(got, want, atol=1e-7)

    def test_kkt_at_returned_estimate(self):
        rng = np.random.default_rng(10)
        design = DesignSpec(kind="dense", p=20, r=0.1, noise_var=1.0)
        _, data = generate(design, 100, seed=3)
        cfg = LassoConfig(n_lambda=40)
        fs = lasso_cv(data, cfg, seed=0)
        # recover the selected penalty from the KKT stationarity itself
        grad = data.x.T @ (data.y - data.x @ fs.theta0_hat) / data.n
        active = fs.theta0_hat != 0
        assert active.any()
        scale = np.sqrt(np.mean(data.x**2, axis=0))
        lam = float(np.max(np.abs(grad / scale)))
        for j in range(20):
            if active[j]:
                assert abs(grad[j] / scale[j]) == pytest.approx(lam, abs=1e-6)
            else:
                assert abs(grad[j] / scale[j]) <= lam + 1e-6

    def test_cv_needs_enough_rows(self):
        rng = np.random.default_rng(11)
        data = Dataset(x=rng.standard_normal((5, 2)), y=rng.standard_normal(5))
        with pytest.raises(ConfigurationError):
            lasso_cv(data, LassoConfig(n_folds=10), seed=0)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(12)
        design = DesignSpec(kind="dense", p=15, r=0.1, noise_var=1.0)
        _, data = generate(design, 80, seed=4)
        a = lasso_cv(data, seed=5)
        b = lasso_cv(data, seed=5)
        np.testing.assert_array_equal(a.theta0_hat, b.theta0_hat)

    def test_sparse_recovery_beats_min_norm(self):
        # high-dimensional sparse truth: L1 should land far closer than
        # the minimum-norm interpolator
        design = DesignSpec(kind="dense", p=120, r=0.1, theta0_kind="sparse",
                            sparsity=6, noise_var=1.0)
        model, data = generate(design, 80, seed=6)
        fs = lasso_cv(data, LassoConfig(lambda_min_ratio=0.01), seed=7)
        lasso_err = np.linalg.norm(fs.theta0_hat - model.theta0)
        mn = np.linalg.lstsq(data.x, data.y, rcond=None)[0]
        assert lasso_err < 0.5 * np.linalg.norm(mn - model.theta0)


class TestSparseCov:
    def test_taper_weights_shape(self):
        w = taper_weights(10, 4)
        np.testing.assert_allclose(w[:3], [1.0, 1.0, 1.0])  # d <= k/2
        assert w[3] == pytest.approx(0.5)
        np.testing.assert_allclose(w[4:], 0.0)

    def test_zero_bandwidth_keeps_diagonal_only(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((50, 6))
        est = sparse_cov(x, SparseCovConfig(alpha=0.2, bandwidth_override=0))
        off = est - np.diag(np.diag(est))
        assert np.max(np.abs(off)) <= 1e-12

    def test_diagonal_preserved(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal((200, 5)) * np.array([1.0, 2.0, 0.5, 1.5, 1.0])
        raw = sample_cov(x)
        est = sparse_cov(x, SparseCovConfig(alpha=0.2, bandwidth_override=2))
        np.testing.assert_allclose(np.diag(est), np.diag(raw), rtol=1e-10)

    def test_output_pd(self):
        rng = np.random.default_rng(15)
        x = rng.standard_normal((30, 40))  # n < p: raw estimate is singular
        cfg = SparseCovConfig(alpha=0.2)
        est = sparse_cov(x, cfg)
        evals = np.linalg.eigvalsh(est)
        assert evals[0] >= cfg.eig_floor - 1e-12
        np.testing.assert_allclose(est, est.T)

    def test_beats_sample_cov_in_spectral_norm(self):
        # bandable truth, n < p: tapering should win most of the time
        design = DesignSpec(kind="sparse", p=100, r=0.6, alpha=0.2, noise_var=1.0)
        cfg = SparseCovConfig(alpha=0.2)
        wins = 0
        reps = 40
        for rep in range(reps):
            model, data = generate(design, 60, seed=replicate_seed(1, "spcov", rep))
            err_taper = np.linalg.norm(sparse_cov(data.x, cfg) - model.sigma, 2)
            err_plain = np.linalg.norm(sample_cov(data.x) - model.sigma, 2)
            wins += err_taper < err_plain
        assert wins >= 0.9 * reps


class TestScaledIdentity:
    def test_identity(self):
        np.testing.assert_allclose(scaled_identity_cov(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(scaled_identity_cov(np.diag([1.0, 3.0])),
                                   3.0 * np.eye(2))

    def test_matches_largest_eigenvalue(self):
        rng = np.random.default_rng(16)
        a = random_pd(rng, 8)
        alpha = scaled_identity_cov(a)[0, 0]
        assert alpha == pytest.approx(np.linalg.eigvalsh(a)[-1], rel=1e-10)


class TestPdRepair:
    def test_identity_unchanged(self):
        np.testing.assert_array_equal(pd_repair(np.eye(3), 1e-6), np.eye(3))

    def test_floor_applied(self):
        got = pd_repair(np.diag([1.0, -0.5]), 1e-6)
        np.testing.assert_allclose(np.linalg.eigvalsh(got), [1e-6, 1.0], rtol=1e-9)

    def test_random_indefinite(self):
        rng = np.random.default_rng(17)
        a = rng.standard_normal((6, 6))
        a = 0.5 * (a + a.T)
        got = pd_repair(a, 1e-4)
        evals = np.linalg.eigvalsh(got)
        assert evals[0] == pytest.approx(1e-4, rel=1e-6)


class TestConsistencyScan:
    def test_median_excess_risk_decreases_in_n(self):
        design = DesignSpec(kind="dense", p=10, r=0.1, noise_var=1.0)
        delta = 1.0
        medians = []
        for n in (250, 500, 1000, 2000):
            vals = []
            for rep in range(30):
                model, data = generate(design, n,
                                       seed=replicate_seed(2, f"scan{n}", rep))
                vals.append(excess_risk(ols(data), model, delta))
            medians.append(np.median(vals))
        assert all(a > b for a, b in zip(medians, medians[1:]))
        assert all(v >= -1e-10 for v in medians)

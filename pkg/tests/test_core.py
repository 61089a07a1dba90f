import math

import numpy as np
import pytest

from advlin.core import (
    Dataset,
    FirstStage,
    ModelSpec,
    Regime,
    RobustSolution,
    pd_solve,
    sigma_norm,
)
from advlin.exceptions import ContractViolationError, FactorizationError


def random_pd(rng, p, scale=1.0):
    a = rng.standard_normal((p, p))
    return scale * (a @ a.T / p + np.eye(p))


class TestSigmaNorm:
    def test_identity(self):
        assert sigma_norm(np.array([1.0, 0.0]), np.eye(2)) == pytest.approx(1.0)

    def test_diagonal(self):
        # 1*1 + 2*4 = 9
        assert sigma_norm(np.array([1.0, 2.0]), np.diag([1.0, 2.0])) == pytest.approx(3.0)

    def test_dense(self):
        # direct quadratic form: 2 + 1 + 1 + 2 = 6
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert sigma_norm(np.array([1.0, 1.0]), a) == pytest.approx(math.sqrt(6.0), abs=1e-12)

    def test_zero_iff_zero_vector(self):
        rng = np.random.default_rng(0)
        for p in (1, 3, 17, 50):
            a = random_pd(rng, p)
            assert sigma_norm(np.zeros(p), a) == 0.0
            v = rng.standard_normal(p)
            assert sigma_norm(v, a) > 0.0

    def test_squared_matches_quadratic_form(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            p = int(rng.integers(1, 51))
            a = random_pd(rng, p)
            v = rng.standard_normal(p)
            q = float(v @ (a @ v))
            assert sigma_norm(v, a) ** 2 == pytest.approx(q, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolationError):
            sigma_norm(np.ones(3), np.eye(2))

    def test_indefinite_matrix_detected(self):
        with pytest.raises(FactorizationError):
            sigma_norm(np.array([1.0, 1.0]), -np.eye(2))


class TestPdSolve:
    def test_identity(self):
        b = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(pd_solve(np.eye(3), b), b)

    def test_diagonal(self):
        np.testing.assert_allclose(
            pd_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1.0, 1.0])

    def test_dense_multiply_back(self):
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        x = pd_solve(a, np.array([3.0, 3.0]))
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(a @ x, [3.0, 3.0], atol=1e-12)

    def test_round_trip_residual(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            p = int(rng.integers(2, 40))
            a = random_pd(rng, p)
            b = rng.standard_normal(p)
            x = pd_solve(a, b)
            assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_matrix_rhs(self):
        rng = np.random.default_rng(3)
        a = random_pd(rng, 5)
        b = rng.standard_normal((5, 3))
        np.testing.assert_allclose(a @ pd_solve(a, b), b, atol=1e-10)

    def test_indefinite_rejected(self):
        with pytest.raises(FactorizationError):
            pd_solve(np.diag([1.0, -1.0]), np.ones(2))


class TestModelSpec:
    def test_valid(self):
        m = ModelSpec(theta0=[1.0, 2.0], sigma=[[2.0, 0.5], [0.5, 1.0]], noise_var=1.0)
        assert m.p == 2
        assert not m.theta0.flags.writeable

    def test_asymmetric_rejected(self):
        with pytest.raises(ContractViolationError):
            ModelSpec(theta0=[1.0, 1.0], sigma=[[1.0, 0.2], [0.1, 1.0]])

    def test_indefinite_rejected(self):
        with pytest.raises(FactorizationError):
            ModelSpec(theta0=[1.0, 1.0], sigma=[[1.0, 2.0], [2.0, 1.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolationError):
            ModelSpec(theta0=[1.0, 1.0, 1.0], sigma=np.eye(2))

    def test_negative_noise(self):
        with pytest.raises(ContractViolationError):
            ModelSpec(theta0=[1.0], sigma=[[1.0]], noise_var=-0.1)


class TestDataset:
    def test_row_mismatch(self):
        with pytest.raises(ContractViolationError):
            Dataset(x=np.ones((3, 2)), y=np.ones(4))

    def test_unlabeled_column_mismatch(self):
        with pytest.raises(ContractViolationError):
            Dataset(x=np.ones((3, 2)), y=np.ones(3), x_unlabeled=np.ones((5, 3)))

    def test_counts(self):
        d = Dataset(x=np.ones((3, 2)), y=np.ones(3), x_unlabeled=np.ones((5, 2)))
        assert (d.n, d.p, d.n_unlabeled) == (3, 2, 5)


class TestRobustSolution:
    def test_regime_consistency(self):
        RobustSolution(theta=np.zeros(2), lambda_star=math.inf, regime=Regime.AT_ZERO)
        RobustSolution(theta=np.ones(2), lambda_star=0.0, regime=Regime.AT_THETA0)
        RobustSolution(theta=np.ones(2), lambda_star=2.5, regime=Regime.INTERIOR,
                       residual=1e-14, iterations=40)

    def test_at_zero_requires_zero_theta(self):
        with pytest.raises(ContractViolationError):
            RobustSolution(theta=np.ones(2), lambda_star=math.inf, regime=Regime.AT_ZERO)

    def test_interior_requires_finite_positive_lambda(self):
        with pytest.raises(ContractViolationError):
            RobustSolution(theta=np.ones(2), lambda_star=0.0, regime=Regime.INTERIOR)


class TestFirstStage:
    def test_psd_required(self):
        with pytest.raises(ContractViolationError):
            FirstStage(theta0_hat=np.ones(2), sigma_hat=np.diag([1.0, -0.5]))

    def test_valid_psd_singular(self):
        fs = FirstStage(theta0_hat=np.ones(2), sigma_hat=np.diag([1.0, 0.0]))
        assert fs.p == 2

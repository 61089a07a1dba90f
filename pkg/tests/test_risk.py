import math

import numpy as np
import pytest

from advlin.core import ModelSpec
from advlin.exceptions import ContractViolationError, SingularPointError
from advlin.risk import (
    C0,
    adversarial_prediction_risk,
    adversarial_risk,
    monte_carlo_risk,
    risk_gradient,
    risk_hessian,
    standard_risk,
    worst_case_input,
)

from test_core import random_pd


def unit_model(p=2, noise_var=0.0):
    theta0 = np.zeros(p)
    theta0[0] = 1.0
    return ModelSpec(theta0=theta0, sigma=np.eye(p), noise_var=noise_var)


def random_model(rng, p, noise_var=0.0):
    theta0 = rng.standard_normal(p)
    return ModelSpec(theta0=theta0, sigma=random_pd(rng, p), noise_var=noise_var)


def finite_diff_gradient(f, theta, step):
    g = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = step
        g[i] = (f(theta + e) - f(theta - e)) / (2 * step)
    return g


class TestC0:
    def test_value(self):
        assert abs(C0 - math.sqrt(2.0 / math.pi)) <= 1e-15

    def test_mean_abs_normal(self):
        rng = np.random.default_rng(42)
        z = rng.standard_normal(10**6)
        est = np.mean(np.abs(z)) / np.std(z)
        se = 3.0 / math.sqrt(10**6)
        assert abs(est - C0) <= 3 * se


class TestAdversarialRisk:
    def test_at_theta0(self):
        # only the attack term survives: delta^2 ||theta0||^2
        m = unit_model()
        assert adversarial_risk(m.theta0, m, 0.5) == pytest.approx(0.25, abs=1e-12)

    def test_at_zero(self):
        rng = np.random.default_rng(0)
        m = random_model(rng, 5)
        want = float(m.theta0 @ m.sigma @ m.theta0)
        for delta in (0.0, 0.7, 3.0):
            assert adversarial_risk(np.zeros(5), m, delta) == pytest.approx(want, rel=1e-12)

    def test_halfway_point_at_unit_budget(self):
        # risk of theta0/2 at delta=1: 0.25 + 0.5 c0 + 0.25 = (1 + c0)/2
        m = unit_model()
        got = adversarial_risk(m.theta0 / 2, m, 1.0)
        assert got == pytest.approx(0.25 + 0.5 * C0 + 0.25, abs=1e-12)
        assert got == pytest.approx((1.0 + C0) / 2.0, abs=1e-12)

    def test_zero_budget_equals_standard_risk(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            m = random_model(rng, 4)
            theta = rng.standard_normal(4)
            assert adversarial_risk(theta, m, 0.0) == pytest.approx(
                standard_risk(theta, m), rel=1e-12)

    def test_negative_delta_rejected(self):
        m = unit_model()
        with pytest.raises(ContractViolationError):
            adversarial_risk(m.theta0, m, -0.1)

    def test_convexity_along_segments(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            m = random_model(rng, 5)
            a = rng.standard_normal(5)
            b = rng.standard_normal(5)
            t = rng.uniform(0.05, 0.95)
            delta = rng.uniform(0.0, 3.0)
            mid = adversarial_risk(t * a + (1 - t) * b, m, delta)
            chord = t * adversarial_risk(a, m, delta) + (1 - t) * adversarial_risk(b, m, delta)
            assert mid <= chord + 1e-10


class TestStandardRisk:
    def test_zero_at_truth(self):
        m = unit_model()
        assert standard_risk(m.theta0, m) == 0.0

    def test_interior_optimum_value(self):
        # theta0/2 at unit norm: ||theta/2 - theta0||^2 = 1/4, which equals
        # the piecewise curve value at delta=1
        m = unit_model()
        assert standard_risk(m.theta0 / 2, m) == pytest.approx(0.25, abs=1e-14)
        den = (1.0 + 1.0 - 2.0 * C0) ** 2
        assert (1.0 - C0) ** 2 / den == pytest.approx(0.25, abs=1e-12)


class TestPredictionRisk:
    def test_noiseless_reduces_to_risk(self):
        rng = np.random.default_rng(3)
        m = random_model(rng, 4, noise_var=0.0)
        theta = rng.standard_normal(4)
        assert adversarial_prediction_risk(theta, m, 0.8) == pytest.approx(
            adversarial_risk(theta, m, 0.8), rel=1e-12)

    def test_at_zero(self):
        rng = np.random.default_rng(4)
        m = random_model(rng, 4, noise_var=1.7)
        want = float(m.theta0 @ m.sigma @ m.theta0) + 1.7
        assert adversarial_prediction_risk(np.zeros(4), m, 2.0) == pytest.approx(want)

    def test_at_truth_with_unit_noise(self):
        m = unit_model(noise_var=1.0)
        got = adversarial_prediction_risk(m.theta0, m, 1.0)
        assert got == pytest.approx(2.0 + 2.0 * C0, abs=1e-12)  # = 3.595769...

    def test_monte_carlo_oracle(self):
        # sample the noisy worst-case loss directly
        rng = np.random.default_rng(5)
        m = unit_model(noise_var=1.0)
        theta, delta, n = m.theta0, 1.0, 200_000
        x = rng.standard_normal((n, 2))
        y = x @ m.theta0 + rng.standard_normal(n)
        losses = (delta * np.linalg.norm(theta) + np.abs(x @ theta - y)) ** 2
        se = losses.std(ddof=1) / math.sqrt(n)
        assert adversarial_prediction_risk(theta, m, delta) == pytest.approx(
            losses.mean(), abs=3 * se)

    def test_identity_at_truth(self):
        # prediction risk minus risk at theta0: sigma^2 + 2 delta c0 ||theta0|| sigma
        rng = np.random.default_rng(6)
        m = random_model(rng, 3, noise_var=2.25)
        delta = 0.9
        nt = np.linalg.norm(m.theta0)
        pred = adversarial_prediction_risk(m.theta0, m, delta)
        risk = adversarial_risk(m.theta0, m, delta)
        assert risk == pytest.approx(delta**2 * nt**2, rel=1e-12)
        assert pred == pytest.approx(2.25 + 2 * delta * C0 * nt * 1.5 + delta**2 * nt**2,
                                     rel=1e-12)


class TestGradient:
    def test_zero_budget_is_quadratic_gradient(self):
        rng = np.random.default_rng(7)
        m = random_model(rng, 4)
        theta = rng.standard_normal(4)
        np.testing.assert_allclose(
            risk_gradient(theta, m, 0.0), 2.0 * m.sigma @ (theta - m.theta0), rtol=1e-12)

    def test_zero_at_interior_optimum(self):
        # for the isotropic unit problem the optimum at delta=1 is theta0/2
        m = unit_model()
        g = risk_gradient(m.theta0 / 2, m, 1.0)
        assert np.linalg.norm(g) <= 1e-10

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            p = int(rng.integers(2, 7))
            m = random_model(rng, p)
            theta = rng.standard_normal(p)
            delta = rng.uniform(0.1, 2.0)
            step = 1e-6 * (1.0 + np.linalg.norm(theta))
            fd = finite_diff_gradient(lambda t: adversarial_risk(t, m, delta), theta, step)
            g = risk_gradient(theta, m, delta)
            assert np.linalg.norm(g - fd) <= 1e-5 * (1.0 + np.linalg.norm(g))

    def test_singular_points_rejected(self):
        m = unit_model()
        with pytest.raises(SingularPointError):
            risk_gradient(np.zeros(2), m, 1.0)
        with pytest.raises(SingularPointError):
            risk_gradient(m.theta0 * (1.0 + 1e-15), m, 1.0)


class TestHessian:
    def test_zero_budget_is_sigma(self):
        rng = np.random.default_rng(9)
        m = random_model(rng, 4)
        theta = rng.standard_normal(4)
        np.testing.assert_allclose(risk_hessian(theta, m, 0.0), m.sigma, atol=1e-12)

    def test_positive_definite_everywhere(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            p = int(rng.integers(2, 7))
            m = random_model(rng, p)
            theta = rng.standard_normal(p)
            delta = rng.uniform(0.05, 2.5)
            evals = np.linalg.eigvalsh(risk_hessian(theta, m, delta))
            assert evals[0] > 0.0

    def test_matches_gradient_finite_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            p = int(rng.integers(2, 6))
            m = random_model(rng, p)
            theta = rng.standard_normal(p)
            delta = rng.uniform(0.1, 2.0)
            step = 1e-6 * (1.0 + np.linalg.norm(theta))
            jac = np.zeros((p, p))
            for i in range(p):
                e = np.zeros(p)
                e[i] = step
                jac[:, i] = (risk_gradient(theta + e, m, delta)
                             - risk_gradient(theta - e, m, delta)) / (2 * step)
            # the hessian returns half the second derivative
            h = risk_hessian(theta, m, delta)
            assert np.linalg.norm(jac / 2.0 - h) <= 1e-4 * (1.0 + np.linalg.norm(h))

    def test_symmetric(self):
        rng = np.random.default_rng(12)
        m = random_model(rng, 5)
        h = risk_hessian(rng.standard_normal(5), m, 1.3)
        np.testing.assert_allclose(h, h.T, atol=0.0)


class TestWorstCaseInput:
    def test_zero_theta_returns_x(self):
        x = np.array([1.0, -2.0])
        np.testing.assert_array_equal(worst_case_input(x, np.zeros(2), 1.0, 0.3), x)

    def test_tie_breaks_positive(self):
        theta = np.array([3.0, 4.0])
        x = np.zeros(2)
        out = worst_case_input(x, theta, 1.0, 0.0)  # x'theta == target exactly
        np.testing.assert_allclose(out, theta / 5.0)

    def test_1d_against_grid_search(self):
        x, theta, target, delta = np.array([1.0]), np.array([2.0]), 0.0, 0.5
        out = worst_case_input(x, theta, delta, target)
        assert out[0] == pytest.approx(1.5)
        grid = np.linspace(0.5, 1.5, 20001)
        best = np.max((grid * theta[0] - target) ** 2)
        assert (out[0] * theta[0] - target) ** 2 >= best - 1e-12

    def test_attains_analytic_inner_max(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            p = int(rng.integers(1, 6))
            x = rng.standard_normal(p)
            theta = rng.standard_normal(p)
            theta0 = rng.standard_normal(p)
            delta = rng.uniform(0.0, 2.0)
            target = float(x @ theta0)
            xstar = worst_case_input(x, theta, delta, target)
            attained = (float(xstar @ theta) - target) ** 2
            analytic = (delta * np.linalg.norm(theta) + abs(float(x @ (theta - theta0)))) ** 2
            assert attained == pytest.approx(analytic, abs=1e-12 * max(1.0, analytic))
            assert np.linalg.norm(xstar - x) == pytest.approx(delta, abs=1e-12)

    def test_dominates_random_feasible_points(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal(4)
        theta = rng.standard_normal(4)
        target = 0.37
        delta = 0.8
        xstar = worst_case_input(x, theta, delta, target)
        best = (float(xstar @ theta) - target) ** 2
        for _ in range(200):
            u = rng.standard_normal(4)
            u *= rng.uniform(0, delta) / np.linalg.norm(u)
            assert (float((x + u) @ theta) - target) ** 2 <= best + 1e-12


class TestMonteCarloRisk:
    def test_zero_variance_at_theta0(self):
        m = unit_model()
        mean, se = monte_carlo_risk(m.theta0, m, 0.5, 1000, seed=0)
        assert mean == pytest.approx(0.25, abs=1e-12)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_matches_closed_form_within_3se(self):
        rng = np.random.default_rng(15)
        p = 10
        theta0 = rng.standard_normal(p)
        theta0 /= np.linalg.norm(theta0)
        m = ModelSpec(theta0=theta0, sigma=np.eye(p), noise_var=0.0)
        for delta in np.arange(0.2, 1.61, 0.2):
            theta = 0.6 * theta0 + 0.05
            mean, se = monte_carlo_risk(theta, m, delta, 40_000, seed=100 + int(delta * 10))
            assert abs(mean - adversarial_risk(theta, m, delta)) <= 3 * se

    def test_se_shrinks_with_n(self):
        rng = np.random.default_rng(16)
        m = random_model(rng, 3)
        theta = rng.standard_normal(3)
        exact = adversarial_risk(theta, m, 0.7)
        errs, ses = [], []
        for n in (10**3, 10**4, 10**5):
            mean, se = monte_carlo_risk(theta, m, 0.7, n, seed=7)
            errs.append(abs(mean - exact))
            ses.append(se)
        # standard error scales like n^(-1/2): one decade in n, ~sqrt(10) in se
        assert ses[0] > ses[1] > ses[2]
        assert ses[0] / ses[2] == pytest.approx(10.0, rel=0.35)
        assert errs[2] <= 4 * ses[2]

    def test_deterministic(self):
        m = unit_model()
        a = monte_carlo_risk(m.theta0 * 0.3, m, 1.0, 5000, seed=11)
        b = monte_carlo_risk(m.theta0 * 0.3, m, 1.0, 5000, seed=11)
        assert a == b

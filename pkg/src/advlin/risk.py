"""Exact adversarial risk for linear regression under L2 covariate attacks.

For an attack budget ``delta``, the adversary moves a test covariate x to
any x* with ||x* - x|| <= delta before the linear predictor is applied.
Against the noiseless response the worst case squared error admits a
closed form: with Gaussian covariates x ~ N(0, Sigma),

    E max_{||x*-x||<=delta} (x*'theta - x'theta0)^2
        = ||theta-theta0||_Sigma^2
          + 2 delta c0 ||theta-theta0||_Sigma ||theta||
          + delta^2 ||theta||^2,

where c0 = sqrt(2/pi) is E|Z| for a standard normal Z. Everything in this
module evaluates that closed form (or its derivatives / sampling analog)
exactly; no optimizer lives here.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ModelSpec, sigma_norm
from .exceptions import ContractViolationError, SingularPointError

#: mean absolute value of a standard normal, sqrt(2/pi)
C0 = math.sqrt(2.0 / math.pi)

#: relative guard radius around the two non-smooth points of the risk
SINGULAR_GUARD = 1e-12


def _check_theta(theta: np.ndarray, model: ModelSpec) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != model.theta0.shape:
        raise ContractViolationError(
            f"theta has shape {theta.shape}, expected {model.theta0.shape}"
        )
    return theta


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if delta < 0.0 or not math.isfinite(delta):
        raise ContractViolationError(f"attack radius must be finite and >= 0, got {delta}")
    return delta


def adversarial_risk(theta: np.ndarray, model: ModelSpec, delta: float) -> float:
    """Worst-case squared error of ``theta`` against the noiseless response."""
    theta = _check_theta(theta, model)
    delta = _check_delta(delta)
    gap = sigma_norm(theta - model.theta0, model.sigma)
    t = float(np.linalg.norm(theta))
    return gap * gap + 2.0 * delta * C0 * gap * t + delta * delta * t * t


def standard_risk(theta: np.ndarray, model: ModelSpec) -> float:
    """Unattacked excess risk ||theta - theta0||_Sigma^2."""
    theta = _check_theta(theta, model)
    gap = sigma_norm(theta - model.theta0, model.sigma)
    return gap * gap


def adversarial_prediction_risk(theta: np.ndarray, model: ModelSpec, delta: float) -> float:
    """Worst-case squared error against the noisy response y.

    Assumes Gaussian noise; the prediction error x'theta - y is then
    N(0, v^2) with v^2 = ||theta-theta0||_Sigma^2 + noise_var, giving

        v^2 + 2 delta c0 ||theta|| v + delta^2 ||theta||^2.
    """
    theta = _check_theta(theta, model)
    delta = _check_delta(delta)
    gap = sigma_norm(theta - model.theta0, model.sigma)
    v = math.sqrt(gap * gap + model.noise_var)
    t = float(np.linalg.norm(theta))
    return v * v + 2.0 * delta * C0 * t * v + delta * delta * t * t


def _guard_radius(model: ModelSpec) -> float:
    scale = float(np.linalg.norm(model.theta0))
    return SINGULAR_GUARD * (scale if scale > 0.0 else 1.0)


def _ratio_parts(theta, model):
    """Common factors of the derivative formulas; raises at the two
    non-smooth points where the norm ratios blow up."""
    guard = _guard_radius(model)
    t = float(np.linalg.norm(theta))
    dv = theta - model.theta0
    gap = sigma_norm(dv, model.sigma)
    if t <= guard:
        raise SingularPointError("risk derivative undefined at theta == 0")
    if float(np.linalg.norm(dv)) <= guard:
        raise SingularPointError("risk derivative undefined at theta == theta0")
    return dv, gap, t


def risk_gradient(theta: np.ndarray, model: ModelSpec, delta: float) -> np.ndarray:
    """Analytic gradient of the adversarial risk.

    With A = ||theta||/||theta-theta0||_Sigma:

        grad = 2 [ (1 + delta c0 A) Sigma (theta - theta0)
                   + (delta c0 / A + delta^2) theta ].

    Undefined (raises) within a tiny relative radius of 0 and theta0.
    """
    theta = _check_theta(theta, model)
    delta = _check_delta(delta)
    dv, gap, t = _ratio_parts(theta, model)
    a_ratio = t / gap
    sdv = model.sigma @ dv
    return 2.0 * ((1.0 + delta * C0 * a_ratio) * sdv
                  + (delta * C0 / a_ratio + delta * delta) * theta)


def risk_hessian(theta: np.ndarray, model: ModelSpec, delta: float) -> np.ndarray:
    """Half the second derivative matrix of the adversarial risk.

    Returned as the symmetrized

        Sigma + delta c0 A Sigma + (delta c0 / A + delta^2) I
        + delta c0 Sigma(theta-theta0) (dA/dtheta)'
        + delta c0 theta (d(1/A)/dtheta)',

    where the rank-one terms come from differentiating the norm ratio
    A = ||theta||/||theta-theta0||_Sigma. Positive definite away from the
    two singular points, which certifies convexity of the risk.
    """
    theta = _check_theta(theta, model)
    delta = _check_delta(delta)
    dv, gap, t = _ratio_parts(theta, model)
    a_ratio = t / gap
    sdv = model.sigma @ dv
    p = model.p
    # dA/dtheta and d(1/A)/dtheta
    grad_a = theta / (t * gap) - (t / gap**3) * sdv
    grad_inv_a = sdv / (t * gap) - (gap / t**3) * theta
    h = (model.sigma * (1.0 + delta * C0 * a_ratio)
         + (delta * C0 / a_ratio + delta * delta) * np.eye(p)
         + delta * C0 * np.outer(sdv, grad_a)
         + delta * C0 * np.outer(theta, grad_inv_a))
    return 0.5 * (h + h.T)


def worst_case_input(x: np.ndarray, theta: np.ndarray, delta: float,
                     target: float) -> np.ndarray:
    """The attack point maximizing (x*'theta - target)^2 over ||x*-x|| <= delta.

    The maximizer steps delta along +-theta/||theta||, in the direction
    that pushes the prediction further from ``target``. Ties at
    x'theta == target break toward +theta for determinism. When theta is
    zero every x* is equivalent and x itself is returned.
    """
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.shape != theta.shape or x.ndim != 1:
        raise ContractViolationError("x and theta must be vectors of equal length")
    delta = _check_delta(delta)
    t = float(np.linalg.norm(theta))
    if t == 0.0:
        return x.copy()
    gap = float(x @ theta) - float(target)
    sign = 1.0 if gap >= 0.0 else -1.0
    return x + (delta * sign / t) * theta


def monte_carlo_risk(theta: np.ndarray, model: ModelSpec, delta: float,
                     n_samples: int, seed: int) -> tuple[float, float]:
    """Simulation estimate of the adversarial risk with its standard error.

    Draws ``n_samples`` covariates x ~ N(0, Sigma) through the Cholesky
    factor of Sigma and averages the pointwise worst-case loss
    (delta ||theta|| + |x'(theta - theta0)|)^2. Fully deterministic for a
    fixed seed.
    """
    theta = _check_theta(theta, model)
    delta = _check_delta(delta)
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ContractViolationError("n_samples must be >= 1")
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(model.sigma)
    z = rng.standard_normal((n_samples, model.p))
    x = z @ chol.T
    margin = delta * float(np.linalg.norm(theta))
    losses = (margin + np.abs(x @ (theta - model.theta0))) ** 2
    mean = float(np.mean(losses))
    if n_samples == 1:
        return mean, 0.0
    se = float(np.std(losses, ddof=1) / math.sqrt(n_samples))
    return mean, se

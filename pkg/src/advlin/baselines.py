"""Comparison estimators: direct adversarial training and trivial references.

Direct adversarial training minimizes the empirical worst-case loss on
the labeled responses. For a linear predictor the inner maximization is
exact, so the training objective is the convex function

    f(theta) = (1/n) sum_i ( delta ||theta|| + |x_i' theta - y_i| )^2

and no iterative attack loop is needed. Minimization runs gradient
descent with backtracking on a smoothed surrogate (both absolute values
replaced by sqrt(u^2 + mu^2)), initialized at the least squares fit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Dataset, ModelSpec
from .exceptions import ContractViolationError, RankError
from .risk import adversarial_risk
from .estimators import ols


@dataclass(frozen=True)
class AdvTrainConfig:
    step0: float = 0.1
    max_iter: int = 5000
    tol: float = 1e-8
    smoothing: float = 1e-6

    def __post_init__(self):
        if not (self.step0 > 0 and self.tol > 0 and self.smoothing > 0):
            raise ContractViolationError("step0, tol and smoothing must be > 0")
        if self.max_iter < 1:
            raise ContractViolationError("max_iter must be >= 1")


@dataclass(frozen=True)
class ReferenceRisks:
    at_theta0: float
    at_zero: float


def adv_train_objective(theta: np.ndarray, data: Dataset, delta: float) -> float:
    """Exact training objective (1/n) sum (delta||theta|| + |x_i'theta - y_i|)^2."""
    margin = delta * float(np.linalg.norm(theta))
    resid = data.x @ theta - data.y
    return float(np.mean((margin + np.abs(resid)) ** 2))


def _smoothed_value_grad(theta, x, y, delta, mu):
    n = x.shape[0]
    t = math.sqrt(float(theta @ theta) + mu * mu)
    resid = x @ theta - y
    s = np.sqrt(resid * resid + mu * mu)
    base = delta * t + s
    value = float(np.mean(base * base))
    grad = (2.0 * delta * float(np.mean(base)) / t) * theta
    grad += (2.0 / n) * (x.T @ (base * resid / s))
    return value, grad


def adv_train_y(data: Dataset, delta: float,
                opt: AdvTrainConfig = AdvTrainConfig()) -> np.ndarray:
    """Minimize the empirical worst-case loss against labeled responses.

    Backtracking gradient descent on the smoothed surrogate, stopping
    once the relative objective decrease falls below ``opt.tol``. Issues
    a warning and returns the best iterate if the budget of iterations
    runs out first.
    """
    delta = float(delta)
    if delta < 0.0:
        raise ContractViolationError("attack radius must be >= 0")
    x, y = data.x, data.y
    try:
        theta = ols(data).theta0_hat.copy()
    except RankError:
        theta = np.zeros(x.shape[1])

    mu = opt.smoothing
    value, grad = _smoothed_value_grad(theta, x, y, delta, mu)
    converged = False
    for _ in range(opt.max_iter):
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0:
            converged = True
            break
        step = opt.step0
        accepted = False
        for _ in range(60):
            cand = theta - step * grad
            cand_value, cand_grad = _smoothed_value_grad(cand, x, y, delta, mu)
            if cand_value <= value - 1e-4 * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True  # gradient too small for any descent at fp precision
            break
        decrease = value - cand_value
        theta, value, grad = cand, cand_value, cand_grad
        if decrease <= opt.tol * max(1.0, abs(value)):
            converged = True
            break
    if not converged:
        warnings.warn("adversarial training hit max_iter before converging",
                      RuntimeWarning, stacklevel=2)
    return theta


def reference_risks(model: ModelSpec, delta: float) -> ReferenceRisks:
    """Adversarial risk of the two trivial reference points theta0 and 0."""
    return ReferenceRisks(
        at_theta0=adversarial_risk(model.theta0, model, delta),
        at_zero=adversarial_risk(np.zeros(model.p), model, delta),
    )

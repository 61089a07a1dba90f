"""Minimizer of the adversarial risk over all coefficient vectors.

The minimizer is always a ridge-like shrinkage of the target vector,

    theta(lambda) = (Sigma + lambda I)^{-1} Sigma theta0,

and the attack budget fixes the penalty through two thresholds

    delta1 = c0 ||theta0|| / ||theta0||_{Sigma^{-1}},
    delta2 = ||theta0||_{Sigma^2} / (c0 ||theta0||_Sigma).

Below delta1 no shrinkage is optimal (lambda*=0); above delta2 total
shrinkage is (lambda*=inf, theta*=0). In between, lambda* is the unique
root of a scalar stationarity condition, which we solve in the
reciprocal parameter eta = 1/lambda where the criterion

    g(eta) = 1 - delta c0 / H(eta) + eta (delta c0 H(eta) - delta^2)

is positive at eta=0 and eventually negative, so bracket expansion plus
bisection always converges. H(eta) is a ratio of two weighted norms of
theta0 and is evaluated componentwise in the eigenbasis of Sigma, making
each criterion evaluation O(p) after one eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Regime, RobustSolution, pd_solve, sigma_norm
from .exceptions import (
    ContractViolationError,
    DegenerateModelError,
    SolverFailureError,
)
from .risk import C0


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances for the scalar root finder.

    tol_g is an absolute tolerance on the stationarity criterion;
    max_bisect bounds both the bracket doublings and the bisection steps.
    """

    tol_g: float = 1e-12
    max_bisect: int = 200
    bracket_growth: float = 2.0
    eta_init: float = 1.0

    def __post_init__(self):
        if not (self.tol_g > 0.0):
            raise ContractViolationError("tol_g must be > 0")
        if self.max_bisect < 1:
            raise ContractViolationError("max_bisect must be >= 1")
        if not (self.bracket_growth > 1.0):
            raise ContractViolationError("bracket_growth must be > 1")
        if not (self.eta_init > 0.0):
            raise ContractViolationError("eta_init must be > 0")


DEFAULT_CONFIG = SolverConfig()


def _validated(theta0, sigma):
    theta0 = np.asarray(theta0, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if theta0.ndim != 1 or sigma.shape != (theta0.shape[0], theta0.shape[0]):
        raise ContractViolationError(
            f"incompatible shapes: theta0 {theta0.shape}, sigma {sigma.shape}"
        )
    return theta0, sigma


def thresholds(theta0: np.ndarray, sigma: np.ndarray) -> tuple[float, float]:
    """Attack budgets separating the no-shrinkage / interior / zero regimes.

    Always returns delta1 <= delta2 (Cauchy-Schwarz plus c0 < 1).
    """
    theta0, sigma = _validated(theta0, sigma)
    norm0 = float(np.linalg.norm(theta0))
    if norm0 == 0.0:
        raise DegenerateModelError("thresholds undefined for a zero coefficient vector")
    inv_norm = math.sqrt(float(theta0 @ pd_solve(sigma, theta0)))
    delta1 = C0 * norm0 / inv_norm
    delta2 = float(np.linalg.norm(sigma @ theta0)) / (C0 * sigma_norm(theta0, sigma))
    return delta1, delta2


def theta_of_lambda(theta0: np.ndarray, sigma: np.ndarray, lam: float) -> np.ndarray:
    """Shrinkage map (Sigma + lambda I)^{-1} Sigma theta0 for finite lambda >= 0."""
    theta0, sigma = _validated(theta0, sigma)
    lam = float(lam)
    if lam < 0.0 or not math.isfinite(lam):
        raise ContractViolationError("lambda must be finite and >= 0")
    if lam == 0.0:
        return theta0.copy()
    return pd_solve(sigma + lam * np.eye(theta0.shape[0]), sigma @ theta0)


class _EigenPath:
    """Shrinkage path of one (theta0, Sigma) problem in the eigenbasis."""

    def __init__(self, theta0, sigma):
        self.evals, self.evecs = np.linalg.eigh(sigma)
        if self.evals[0] <= 0.0:
            raise ContractViolationError("sigma must be positive definite")
        self.b = self.evecs.T @ theta0
        self.db2 = self.evals * self.b**2          # d_i b_i^2
        self.d2b2 = (self.evals * self.b) ** 2     # d_i^2 b_i^2

    def norm_ratio(self, eta: float) -> float:
        """H(eta): the eigenvalue-weighted norm ratio driving stationarity.

        Finite and decreasing on [0, inf), from H(0) = c0 * delta2
        (= ||Sigma theta0|| / ||theta0||_Sigma) down to H(inf) = delta1 / c0
        (= ||theta0|| / ||theta0||_{Sigma^{-1}}).
        """
        w = 1.0 / (eta * self.evals + 1.0) ** 2
        return math.sqrt(float(np.sum(self.d2b2 * w)) / float(np.sum(self.db2 * w)))

    def criterion(self, delta: float, eta: float) -> float:
        h = self.norm_ratio(eta)
        return 1.0 - delta * C0 / h + eta * (delta * C0 * h - delta * delta)

    def theta_at_lambda(self, lam: float) -> np.ndarray:
        coeff = self.evals / (self.evals + lam)
        return self.evecs @ (coeff * self.b)


def g_of_eta(theta0: np.ndarray, sigma: np.ndarray, delta: float, eta: float) -> float:
    """Stationarity criterion in the reciprocal penalty eta = 1/lambda.

    g(0) equals 1 - delta/delta2 (analytic limit; no 0/0 is evaluated),
    g is positive below the interior root and negative above it.
    """
    theta0, sigma = _validated(theta0, sigma)
    if float(np.linalg.norm(theta0)) == 0.0:
        raise DegenerateModelError("criterion undefined for a zero coefficient vector")
    eta = float(eta)
    if eta < 0.0 or not math.isfinite(eta):
        raise ContractViolationError("eta must be finite and >= 0")
    delta = float(delta)
    if delta < 0.0:
        raise ContractViolationError("attack radius must be >= 0")
    return _EigenPath(theta0, sigma).criterion(delta, eta)


def solve(theta0: np.ndarray, sigma: np.ndarray, delta: float,
          cfg: SolverConfig = DEFAULT_CONFIG) -> RobustSolution:
    """Compute the adversarial-risk minimizer for one attack budget.

    Classifies the budget against the two thresholds (boundaries belong
    to the closed outer regimes), and in the interior expands an eta
    bracket geometrically until the criterion changes sign, then bisects
    to |g| <= cfg.tol_g.
    """
    theta0, sigma = _validated(theta0, sigma)
    delta = float(delta)
    if delta < 0.0:
        raise ContractViolationError("attack radius must be >= 0")
    if float(np.linalg.norm(theta0)) == 0.0:
        raise DegenerateModelError("solve undefined for a zero coefficient vector")

    delta1, delta2 = thresholds(theta0, sigma)
    if delta <= delta1:
        return RobustSolution(theta=theta0.copy(), lambda_star=0.0,
                              regime=Regime.AT_THETA0)
    if delta >= delta2:
        return RobustSolution(theta=np.zeros_like(theta0), lambda_star=math.inf,
                              regime=Regime.AT_ZERO)

    path = _EigenPath(theta0, sigma)
    g = lambda eta: path.criterion(delta, eta)

    lo, g_lo = 0.0, g(0.0)  # equals 1 - delta/delta2 > 0 here
    hi = cfg.eta_init
    g_hi = g(hi)
    expansions = 0
    while g_hi >= 0.0:
        expansions += 1
        if expansions > cfg.max_bisect:
            raise SolverFailureError(
                f"criterion never became negative after {expansions} bracket expansions"
            )
        lo, g_lo = hi, g_hi
        hi *= cfg.bracket_growth
        g_hi = g(hi)

    eta_star, g_star = hi, g_hi
    if abs(g_lo) < abs(g_star):
        eta_star, g_star = lo, g_lo
    iterations = 0
    for iterations in range(1, cfg.max_bisect + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval collapsed to fp spacing
            break
        g_mid = g(mid)
        if abs(g_mid) < abs(g_star):
            eta_star, g_star = mid, g_mid
        if abs(g_mid) <= cfg.tol_g:
            break
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid

    if abs(g_star) > cfg.tol_g:
        raise SolverFailureError(
            f"bisection stalled with criterion residual {abs(g_star):.3e} > {cfg.tol_g:.3e}"
        )
    lam = 1.0 / eta_star
    return RobustSolution(theta=path.theta_at_lambda(lam), lambda_star=lam,
                          regime=Regime.INTERIOR, residual=abs(g_star),
                          iterations=iterations)


def delta_of_lambda(theta0: np.ndarray, sigma: np.ndarray, lam: float) -> float:
    """Inverse of the penalty map: the unique budget whose optimal penalty
    is ``lam``.

    Derived by treating the stationarity condition as a quadratic in the
    budget: with A = ||theta(lam)|| / ||theta(lam)-theta0||_Sigma,

        delta = ( lam c0 A - c0/A + sqrt((lam c0 A - c0/A)^2 + 4 lam) ) / 2.

    Strictly increasing in lam over the interior regime.
    """
    theta0, sigma = _validated(theta0, sigma)
    lam = float(lam)
    if not (lam > 0.0) or not math.isfinite(lam):
        raise ContractViolationError("lambda must be finite and > 0")
    if float(np.linalg.norm(theta0)) == 0.0:
        raise DegenerateModelError("inverse map undefined for a zero coefficient vector")
    th = theta_of_lambda(theta0, sigma, lam)
    a_ratio = float(np.linalg.norm(th)) / sigma_norm(th - theta0, sigma)
    half = lam * C0 * a_ratio - C0 / a_ratio
    return 0.5 * (half + math.sqrt(half * half + 4.0 * lam))

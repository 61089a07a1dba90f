"""Shared domain types and positive-definite linear algebra primitives.

All value types are immutable after construction: array fields are copied
and marked read-only, so instances can be shared freely across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import ContractViolationError, FactorizationError

SYMMETRY_TOL = 1e-12


def _frozen_array(a, dtype=float, ndim=None, name="array"):
    out = np.array(a, dtype=dtype)
    if ndim is not None and out.ndim != ndim:
        raise ContractViolationError(f"{name} must be {ndim}-dimensional, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    out.setflags(write=False)
    return out


def check_symmetric(a: np.ndarray, tol: float = SYMMETRY_TOL, name: str = "matrix") -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolationError(f"{name} must be square, got shape {a.shape}")
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if asym > tol * scale:
        raise ContractViolationError(f"{name} is not symmetric (max asymmetry {asym:.3e})")


class Regime(enum.Enum):
    """Which of the three shrinkage regimes a solution belongs to."""

    AT_THETA0 = "at_theta0"  # no shrinkage: solution equals the plug-in coefficients
    INTERIOR = "interior"    # strict shrinkage with finite positive penalty
    AT_ZERO = "at_zero"      # full shrinkage: solution is the zero vector


@dataclass(frozen=True)
class ModelSpec:
    """Ground truth of the linear model y = x'theta0 + eps.

    Parameters
    ----------
    theta0 : (p,) array
        True coefficient vector.
    sigma : (p, p) array
        Covariance of the Gaussian covariates; symmetric positive definite.
    noise_var : float
        Variance of the additive noise, >= 0.
    """

    theta0: np.ndarray
    sigma: np.ndarray
    noise_var: float = 0.0

    def __post_init__(self):
        theta0 = _frozen_array(self.theta0, ndim=1, name="theta0")
        sigma = _frozen_array(self.sigma, ndim=2, name="sigma")
        object.__setattr__(self, "theta0", theta0)
        object.__setattr__(self, "sigma", sigma)
        if theta0.shape[0] < 1:
            raise ContractViolationError("model dimension p must be >= 1")
        if sigma.shape != (theta0.shape[0], theta0.shape[0]):
            raise ContractViolationError(
                f"sigma shape {sigma.shape} does not match theta0 length {theta0.shape[0]}"
            )
        check_symmetric(sigma, name="sigma")
        try:
            scipy.linalg.cholesky(sigma, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise FactorizationError("sigma is not positive definite") from exc
        if not (self.noise_var >= 0.0):
            raise ContractViolationError("noise_var must be >= 0")

    @property
    def p(self) -> int:
        return self.theta0.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Design matrix, responses and optional unlabeled covariate rows."""

    x: np.ndarray
    y: np.ndarray
    x_unlabeled: np.ndarray | None = None

    def __post_init__(self):
        x = _frozen_array(self.x, ndim=2, name="x")
        y = _frozen_array(self.y, ndim=1, name="y")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.shape[0] != y.shape[0]:
            raise ContractViolationError(
                f"x has {x.shape[0]} rows but y has length {y.shape[0]}"
            )
        if x.shape[0] < 1:
            raise ContractViolationError("need at least one observation")
        if self.x_unlabeled is not None:
            xu = _frozen_array(self.x_unlabeled, ndim=2, name="x_unlabeled")
            object.__setattr__(self, "x_unlabeled", xu)
            if xu.shape[1] != x.shape[1]:
                raise ContractViolationError(
                    f"x_unlabeled has {xu.shape[1]} columns, expected {x.shape[1]}"
                )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def n_unlabeled(self) -> int:
        return 0 if self.x_unlabeled is None else self.x_unlabeled.shape[0]


@dataclass(frozen=True)
class RobustSolution:
    """Minimizer of the (population or plug-in) adversarial risk.

    ``lambda_star`` is the ridge-like penalty level; it is 0 in the
    AT_THETA0 regime and ``math.inf`` in the AT_ZERO regime. Downstream
    formulas must branch on ``regime`` instead of substituting the
    infinite penalty into matrix expressions.
    """

    theta: np.ndarray
    lambda_star: float
    regime: Regime
    residual: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        theta = _frozen_array(self.theta, ndim=1, name="theta")
        object.__setattr__(self, "theta", theta)
        if self.regime is Regime.AT_THETA0:
            if self.lambda_star != 0.0:
                raise ContractViolationError("AT_THETA0 regime requires lambda_star == 0")
        elif self.regime is Regime.AT_ZERO:
            if not math.isinf(self.lambda_star):
                raise ContractViolationError("AT_ZERO regime requires the infinite-penalty flag")
            if np.any(theta != 0.0):
                raise ContractViolationError("AT_ZERO regime requires theta == 0")
        else:
            if not (0.0 < self.lambda_star < math.inf):
                raise ContractViolationError("interior regime requires 0 < lambda_star < inf")
        if not (self.residual >= 0.0):
            raise ContractViolationError("residual must be >= 0")


@dataclass(frozen=True)
class FirstStage:
    """A standard (non-adversarial) estimate of the model: coefficients,
    covariance and residual variance."""

    theta0_hat: np.ndarray
    sigma_hat: np.ndarray
    noise_var_hat: float = 0.0
    psd_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        th = _frozen_array(self.theta0_hat, ndim=1, name="theta0_hat")
        sh = _frozen_array(self.sigma_hat, ndim=2, name="sigma_hat")
        object.__setattr__(self, "theta0_hat", th)
        object.__setattr__(self, "sigma_hat", sh)
        if sh.shape != (th.shape[0], th.shape[0]):
            raise ContractViolationError("sigma_hat shape does not match theta0_hat length")
        check_symmetric(sh, tol=1e-8, name="sigma_hat")
        if np.linalg.eigvalsh(sh)[0] < -self.psd_tol:
            raise ContractViolationError("sigma_hat is not positive semidefinite")
        if not (self.noise_var_hat >= 0.0):
            raise ContractViolationError("noise_var_hat must be >= 0")

    @property
    def p(self) -> int:
        return self.theta0_hat.shape[0]


def sigma_norm(v: np.ndarray, a: np.ndarray) -> float:
    """Weighted Euclidean norm sqrt(v' a v) for a symmetric PD weight matrix.

    Raises
    ------
    ContractViolationError
        If dimensions do not match.
    FactorizationError
        If the quadratic form comes out negative, which certifies that
        ``a`` is not positive semidefinite.
    """
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    check_symmetric(a, tol=1e-8, name="weight matrix")
    if v.ndim != 1 or a.shape[0] != v.shape[0]:
        raise ContractViolationError(
            f"dimension mismatch: vector {v.shape} vs matrix {a.shape}"
        )
    q = float(v @ (a @ v))
    if q < 0.0:
        vv = float(v @ v)
        if q < -1e-12 * max(vv, 1.0):
            raise FactorizationError("weight matrix is not positive semidefinite")
        q = 0.0
    return math.sqrt(q)


def pd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b for symmetric positive definite a via Cholesky.

    Never forms an explicit inverse. Accepts a vector or matrix right-hand
    side and returns the solution with matching shape.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    check_symmetric(a, tol=1e-8, name="matrix")
    if b.shape[0] != a.shape[0]:
        raise ContractViolationError(
            f"right-hand side has leading dimension {b.shape[0]}, expected {a.shape[0]}"
        )
    try:
        factor = scipy.linalg.cho_factor(a, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise FactorizationError("matrix is singular or not positive definite") from exc
    return scipy.linalg.cho_solve(factor, b)

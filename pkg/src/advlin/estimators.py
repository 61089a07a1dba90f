"""First-stage estimators: coefficients, covariance and noise variance.

These are the standard (non-adversarial) estimators whose output gets
plugged into the shrinkage solver. The model has centered covariates,
so covariance estimates use the uncentered second moment X'X/n by
default; pass ``center=True`` for real data with nonzero means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._kernels import cd_path
from .core import Dataset, FirstStage
from .exceptions import ConfigurationError, ContractViolationError, RankError

__all__ = [
    "LassoConfig",
    "SparseCovConfig",
    "ols",
    "lasso_cv",
    "sample_cov",
    "sparse_cov",
    "scaled_identity_cov",
    "pd_repair",
]


@dataclass(frozen=True)
class LassoConfig:
    """Path, cross-validation and coordinate-descent settings.

    ``selection`` picks the penalty from the CV curve: "1se" takes the
    largest penalty whose mean validation MSE is within one standard
    error of the minimum (the customary reporting default of reference
    implementations); "min" takes the minimizer itself.
    """

    n_lambda: int = 100
    lambda_min_ratio: float = 1e-3
    n_folds: int = 10
    cd_tol: float = 1e-8
    cd_max_iter: int = 100_000
    standardize: bool = True
    selection: str = "1se"

    def __post_init__(self):
        if self.n_lambda < 2:
            raise ContractViolationError("n_lambda must be >= 2")
        if self.n_folds < 2:
            raise ContractViolationError("n_folds must be >= 2")
        if not (self.cd_tol > 0.0):
            raise ContractViolationError("cd_tol must be > 0")
        if not (0.0 < self.lambda_min_ratio < 1.0):
            raise ContractViolationError("lambda_min_ratio must lie in (0, 1)")
        if self.selection not in ("1se", "min"):
            raise ContractViolationError("selection must be '1se' or 'min'")


@dataclass(frozen=True)
class SparseCovConfig:
    """Tapered covariance estimation for bandable matrices.

    ``alpha`` is the known off-band decay exponent; the default bandwidth
    round(n^(1/(2 alpha + 1))) can be overridden explicitly.
    """

    alpha: float
    bandwidth_override: int | None = None
    eig_floor: float = 1e-6

    def __post_init__(self):
        if not (self.alpha > 0.0):
            raise ContractViolationError("alpha must be > 0")
        if self.bandwidth_override is not None and self.bandwidth_override < 0:
            raise ContractViolationError("bandwidth_override must be >= 0")
        if not (self.eig_floor > 0.0):
            raise ContractViolationError("eig_floor must be > 0")


def _all_rows(data: Dataset) -> np.ndarray:
    if data.x_unlabeled is None:
        return data.x
    return np.vstack([data.x, data.x_unlabeled])


def sample_cov(x_all: np.ndarray, center: bool = False) -> np.ndarray:
    """Second-moment covariance X'X/n over all provided rows."""
    x_all = np.asarray(x_all, dtype=float)
    if x_all.ndim != 2 or x_all.shape[0] < 1:
        raise ContractViolationError("x_all must be a nonempty 2-d matrix")
    if center:
        x_all = x_all - x_all.mean(axis=0)
    cov = x_all.T @ x_all / x_all.shape[0]
    return 0.5 * (cov + cov.T)


def ols(data: Dataset) -> FirstStage:
    """Least squares coefficients with the sample covariance.

    Requires n > p and a nonsingular Gram matrix. The noise variance is
    the residual sum of squares over n - p degrees of freedom. Unlabeled
    rows, when present, enter the covariance estimate only.
    """
    x, y = data.x, data.y
    n, p = x.shape
    if n <= p:
        raise RankError(f"least squares needs n > p, got n={n}, p={p}")
    gram = x.T @ x
    try:
        factor = scipy.linalg.cho_factor(0.5 * (gram + gram.T), lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise RankError("singular Gram matrix") from exc
    theta_hat = scipy.linalg.cho_solve(factor, x.T @ y)
    resid = y - x @ theta_hat
    noise_var = float(resid @ resid) / max(n - p, 1)
    return FirstStage(theta0_hat=theta_hat,
                      sigma_hat=sample_cov(_all_rows(data)),
                      noise_var_hat=noise_var)


def _lambda_grid(lam_max: float, cfg: LassoConfig) -> np.ndarray:
    lam_max = max(lam_max, 1e-300)
    return np.geomspace(lam_max, lam_max * cfg.lambda_min_ratio, cfg.n_lambda)


def _standardized(x: np.ndarray, standardize: bool):
    if not standardize:
        return x, np.ones(x.shape[1])
    scale = np.sqrt(np.mean(x * x, axis=0))
    scale[scale == 0.0] = 1.0
    return x / scale, scale


#: coordinate tolerance for CV fold fits; the validation-MSE curve only
#: needs statistical accuracy, the selected model is refit at cd_tol
CV_FOLD_TOL = 1e-4


def lasso_path(x: np.ndarray, y: np.ndarray, lambdas: np.ndarray,
               cfg: LassoConfig = LassoConfig(), tol: float | None = None) -> np.ndarray:
    """Coefficients minimizing (1/2n)||y - X theta||^2 + lam ||theta||_1
    for each penalty of a decreasing sequence, warm-started down the path.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    xs, scale = _standardized(x, cfg.standardize)
    gram = xs.T @ xs / n
    xty = xs.T @ y / n
    coefs, _ = cd_path(0.5 * (gram + gram.T), xty, np.asarray(lambdas, dtype=float),
                       cfg.cd_tol if tol is None else tol, cfg.cd_max_iter)
    return coefs / scale[None, :]


def lasso_cv(data: Dataset, cfg: LassoConfig = LassoConfig(), seed: int = 0) -> FirstStage:
    """L1-penalized coefficients with the penalty chosen by K-fold CV.

    The penalty grid is log-spaced from the smallest value that zeroes
    every coefficient down to ``lambda_min_ratio`` times it; the grid
    point chosen by ``cfg.selection`` from the mean validation-MSE curve
    wins and the model is refit on the full data at ``cd_tol`` (fold
    fits run at the looser CV_FOLD_TOL). Fold assignment is a
    deterministic shuffle of the provided seed. Noise variance uses n
    minus the number of nonzero coefficients (floored at 1) as degrees
    of freedom.
    """
    x, y = data.x, data.y
    n = x.shape[0]
    if n < cfg.n_folds:
        raise ConfigurationError(f"cannot split {n} rows into {cfg.n_folds} folds")

    xs, _ = _standardized(x, cfg.standardize)
    lam_max = float(np.max(np.abs(xs.T @ y))) / n
    lambdas = _lambda_grid(lam_max, cfg)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    perm = rng.permutation(n)
    folds = np.array_split(perm, cfg.n_folds)

    fold_tol = max(cfg.cd_tol, CV_FOLD_TOL)
    val_mse = np.zeros((cfg.n_folds, lambdas.shape[0]))
    for fi, val_idx in enumerate(folds):
        if val_idx.size == 0 or val_idx.size == n:
            raise ConfigurationError("degenerate CV fold")
        mask = np.ones(n, dtype=bool)
        mask[val_idx] = False
        coefs = lasso_path(x[mask], y[mask], lambdas, cfg, tol=fold_tol)
        pred = x[val_idx] @ coefs.T
        val_mse[fi] = np.mean((pred - y[val_idx][:, None]) ** 2, axis=0)

    mean_mse = val_mse.mean(axis=0)
    best = int(np.argmin(mean_mse))
    if cfg.selection == "1se":
        se = float(val_mse[:, best].std(ddof=1)) / math.sqrt(cfg.n_folds)
        best = int(np.flatnonzero(mean_mse <= mean_mse[best] + se)[0])
    theta_hat = lasso_path(x, y, lambdas, cfg)[best]

    resid = y - x @ theta_hat
    df = max(n - int(np.count_nonzero(theta_hat)), 1)
    return FirstStage(theta0_hat=theta_hat,
                      sigma_hat=sample_cov(_all_rows(data)),
                      noise_var_hat=float(resid @ resid) / df)


def pd_repair(a: np.ndarray, floor: float) -> np.ndarray:
    """Clip the spectrum of a symmetric matrix from below at ``floor``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolationError(f"expected a square matrix, got shape {a.shape}")
    a = 0.5 * (a + a.T)
    evals, evecs = np.linalg.eigh(a)
    if evals[0] >= floor:
        return a
    repaired = (evecs * np.maximum(evals, floor)) @ evecs.T
    return 0.5 * (repaired + repaired.T)


def taper_weights(p: int, bandwidth: int) -> np.ndarray:
    """Flat-top taper: weight 1 within bandwidth/2, linear decay to 0 at
    the bandwidth, 0 beyond. Entry d is the weight at band distance d."""
    d = np.arange(p, dtype=float)
    k = float(bandwidth)
    if bandwidth <= 0:
        w = np.zeros(p)
        w[0] = 1.0
        return w
    return np.clip(2.0 - 2.0 * d / k, 0.0, 1.0)


def sparse_cov(x_all: np.ndarray, cfg: SparseCovConfig) -> np.ndarray:
    """Tapered covariance estimate for bandable matrices.

    Applies the flat-top taper to the sample covariance at bandwidth
    round(n^(1/(2 alpha + 1))) (or the override), then floors the
    spectrum to restore positive definiteness.
    """
    x_all = np.asarray(x_all, dtype=float)
    cov = sample_cov(x_all)
    n, p = x_all.shape
    if cfg.bandwidth_override is not None:
        k = cfg.bandwidth_override
    else:
        k = int(round(n ** (1.0 / (2.0 * cfg.alpha + 1.0))))
    weights = scipy.linalg.toeplitz(taper_weights(p, k))
    return pd_repair(cov * weights, cfg.eig_floor)


def scaled_identity_cov(sigma_hat: np.ndarray) -> np.ndarray:
    """Spectral-norm multiple of the identity, ||sigma_hat|| * I."""
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    if sigma_hat.ndim != 2 or sigma_hat.shape[0] != sigma_hat.shape[1]:
        raise ContractViolationError("sigma_hat must be square")
    alpha = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (sigma_hat + sigma_hat.T)))))
    return alpha * np.eye(sigma_hat.shape[0])

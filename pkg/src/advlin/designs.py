"""Simulation designs: covariance families, coefficient layouts, sampling.

A DesignSpec pins down how a ground-truth model is drawn; ``generate``
turns one (design, n, seed) triple into a model plus a dataset, fully
deterministically. Draw order is fixed (covariance, coefficients,
labeled X, noise, unlabeled X) so the same seed always yields the same
bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, ModelSpec
from .exceptions import ContractViolationError

COV_KINDS = ("dense", "sparse", "identity", "custom")
THETA_KINDS = ("unit_sphere", "sparse", "fixed")

PD_RETRIES = 100
PD_MIN_EIG = 1e-8


@dataclass(frozen=True)
class DesignSpec:
    """How to draw (theta0, Sigma) and the data.

    kind "dense": Sigma_ii = 2r + |tau_i| with tau_i iid standard normal,
    off-diagonal entries r (redrawn, bounded retries, if not positive
    definite). kind "sparse": Sigma_ii = 1, Sigma_ij = r |i-j|^(-alpha-1),
    a bandable matrix. kind "identity": Sigma = I. kind "custom": the
    matrix passed as sigma_fixed.

    theta0_kind "unit_sphere" draws uniformly from the unit sphere;
    "sparse" sets the first ``sparsity`` coordinates to 1/sqrt(sparsity);
    "fixed" uses theta0_fixed as given.
    """

    kind: str = "dense"
    p: int = 10
    r: float = 0.1
    alpha: float = 0.2
    theta0_kind: str = "unit_sphere"
    sparsity: int = 0
    theta0_fixed: tuple[float, ...] | None = None
    sigma_fixed: tuple[tuple[float, ...], ...] | None = None
    noise_var: float = 1.0
    seed: int = 20240

    def __post_init__(self):
        if self.kind not in COV_KINDS:
            raise ContractViolationError(f"unknown covariance kind {self.kind!r}")
        if self.theta0_kind not in THETA_KINDS:
            raise ContractViolationError(f"unknown theta0 kind {self.theta0_kind!r}")
        if self.p < 1:
            raise ContractViolationError("p must be >= 1")
        if self.kind == "custom" and self.sigma_fixed is None:
            raise ContractViolationError("custom covariance requires sigma_fixed")
        if self.theta0_kind == "fixed" and self.theta0_fixed is None:
            raise ContractViolationError("fixed theta0 requires theta0_fixed")
        if self.theta0_kind == "sparse" and not (0 < self.sparsity <= self.p):
            raise ContractViolationError("sparse theta0 requires 0 < sparsity <= p")
        if self.noise_var < 0:
            raise ContractViolationError("noise_var must be >= 0")


def draw_sigma(design: DesignSpec, rng: np.random.Generator) -> np.ndarray:
    p = design.p
    if design.kind == "identity":
        return np.eye(p)
    if design.kind == "custom":
        sigma = np.asarray(design.sigma_fixed, dtype=float)
        if sigma.shape != (p, p):
            raise ContractViolationError("sigma_fixed has the wrong shape")
        return sigma
    if design.kind == "sparse":
        idx = np.arange(p)
        dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
        with np.errstate(divide="ignore"):
            sigma = design.r * dist ** (-design.alpha - 1.0)
        np.fill_diagonal(sigma, 1.0)
        return sigma
    # dense: equicorrelation r plus a random diagonal 2r + |tau_i|
    for _ in range(PD_RETRIES):
        tau = rng.standard_normal(p)
        sigma = np.full((p, p), design.r)
        np.fill_diagonal(sigma, 2.0 * design.r + np.abs(tau))
        if np.linalg.eigvalsh(sigma)[0] > PD_MIN_EIG:
            return sigma
    raise ContractViolationError(
        f"could not draw a positive definite covariance in {PD_RETRIES} tries")


def draw_theta0(design: DesignSpec, rng: np.random.Generator) -> np.ndarray:
    if design.theta0_kind == "fixed":
        theta0 = np.asarray(design.theta0_fixed, dtype=float)
        if theta0.shape != (design.p,):
            raise ContractViolationError("theta0_fixed has the wrong length")
        return theta0
    if design.theta0_kind == "sparse":
        theta0 = np.zeros(design.p)
        theta0[: design.sparsity] = 1.0 / np.sqrt(design.sparsity)
        return theta0
    z = rng.standard_normal(design.p)
    return z / np.linalg.norm(z)


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def generate(design: DesignSpec, n: int, n_unlabeled: int = 0,
             seed: int | np.random.SeedSequence | None = None
             ) -> tuple[ModelSpec, Dataset]:
    """Draw one model and dataset; ``seed=None`` uses the design seed."""
    if n < 1:
        raise ContractViolationError("n must be >= 1")
    if n_unlabeled < 0:
        raise ContractViolationError("n_unlabeled must be >= 0")
    rng = np.random.default_rng(_as_seed_sequence(design.seed if seed is None else seed))
    sigma = draw_sigma(design, rng)
    theta0 = draw_theta0(design, rng)
    chol = np.linalg.cholesky(sigma)
    x = rng.standard_normal((n, design.p)) @ chol.T
    eps = rng.standard_normal(n) * np.sqrt(design.noise_var)
    y = x @ theta0 + eps
    x_unlabeled = None
    if n_unlabeled > 0:
        x_unlabeled = rng.standard_normal((n_unlabeled, design.p)) @ chol.T
    model = ModelSpec(theta0=theta0, sigma=sigma, noise_var=design.noise_var)
    return model, Dataset(x=x, y=y, x_unlabeled=x_unlabeled)


def replicate_seed(master_seed: int, experiment: str, replicate: int) -> np.random.SeedSequence:
    """Deterministic per-replicate stream: hash of (master, experiment, index).

    Independent of scheduling, so replicates can run in any order or in
    parallel and still reproduce bit-identically.
    """
    import zlib

    code = zlib.crc32(experiment.encode("utf-8"))
    return np.random.SeedSequence(entropy=[int(master_seed), code, int(replicate)])

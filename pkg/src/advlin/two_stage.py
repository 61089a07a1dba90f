"""Two-stage adversarially robust estimation.

Stage one is any standard estimate of (theta0, Sigma); stage two feeds
it through the exact population minimizer map. The resulting coefficient
vector minimizes the plug-in risk

    ||theta - theta0_hat||_{Sigma_hat}^2
    + 2 delta c0 ||theta - theta0_hat||_{Sigma_hat} ||theta||
    + delta^2 ||theta||^2,

the same functional as the population adversarial risk with estimates in
place of the truth (including the delta^2 weight on the ||theta||^2
term, so the two functionals coincide when the first stage is exact).
"""

from __future__ import annotations

import math

import numpy as np

from .core import FirstStage, ModelSpec, Regime, RobustSolution
from .risk import adversarial_risk
from .solver import DEFAULT_CONFIG, SolverConfig, solve


def fit(fs: FirstStage, delta: float, cfg: SolverConfig = DEFAULT_CONFIG) -> RobustSolution:
    """Minimize the plug-in adversarial risk built from a first stage.

    A zero first-stage coefficient vector short-circuits to the zero
    solution for every budget (the regime thresholds are undefined there).
    """
    if float(np.linalg.norm(fs.theta0_hat)) == 0.0:
        return RobustSolution(theta=np.zeros(fs.p), lambda_star=math.inf,
                              regime=Regime.AT_ZERO)
    return solve(fs.theta0_hat, fs.sigma_hat, delta, cfg)


def empirical_risk(theta: np.ndarray, fs: FirstStage, delta: float) -> float:
    """Plug-in adversarial risk of ``theta`` under first-stage estimates."""
    plug_in = ModelSpec(theta0=fs.theta0_hat, sigma=fs.sigma_hat, noise_var=0.0)
    return adversarial_risk(theta, plug_in, delta)


def excess_risk(fs: FirstStage, model: ModelSpec, delta: float,
                cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """Population risk gap between the two-stage fit and the exact optimum.

    Nonnegative up to solver tolerance, since the exact optimum is the
    global minimizer of the population risk.
    """
    fitted = fit(fs, delta, cfg)
    optimum = solve(model.theta0, model.sigma, delta, cfg)
    return adversarial_risk(fitted.theta, model, delta) - adversarial_risk(
        optimum.theta, model, delta)

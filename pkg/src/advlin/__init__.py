"""Adversarially robust linear regression.

Exact closed-form adversarial risk under L2 covariate attacks, the
shrinkage solver for its minimizer, a two-stage estimator that plugs any
standard first stage into the population minimizer map, inference via
the estimator's linearization, baseline comparisons, and a seeded
simulation harness with a CLI (``advlin``).
"""

from .baselines import AdvTrainConfig, ReferenceRisks, adv_train_y, reference_risks
from .core import (
    Dataset,
    FirstStage,
    ModelSpec,
    Regime,
    RobustSolution,
    pd_solve,
    sigma_norm,
)
from .designs import DesignSpec, generate
from .estimators import (
    LassoConfig,
    SparseCovConfig,
    lasso_cv,
    ols,
    pd_repair,
    sample_cov,
    scaled_identity_cov,
    sparse_cov,
)
from .exceptions import (
    AdvlinError,
    ConfigurationError,
    ContractViolationError,
    DegenerateModelError,
    FactorizationError,
    NumericError,
    RankError,
    RegimeError,
    SingularPointError,
    SolverFailureError,
    TransitionPointError,
)
from .experiments import ExperimentResult, run_experiment, summarize
from .inference import (
    BahadurOperators,
    ErrorTerms,
    bahadur_operators,
    confidence_intervals,
    error_decomposition,
    plugin_covariance,
)
from .risk import (
    C0,
    adversarial_prediction_risk,
    adversarial_risk,
    monte_carlo_risk,
    risk_gradient,
    risk_hessian,
    standard_risk,
    worst_case_input,
)
from .solver import (
    SolverConfig,
    delta_of_lambda,
    g_of_eta,
    solve,
    theta_of_lambda,
    thresholds,
)
from .two_stage import empirical_risk, excess_risk, fit

__version__ = "0.1.0"

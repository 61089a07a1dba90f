"""Experiment drivers: seeded simulation grids with CSV output.

Each experiment produces one replicate-level CSV and one aggregated
summary CSV. Replicate seeds derive deterministically from
(master seed, experiment name, replicate index), so reruns with the same
configuration are byte-identical and replicates could be distributed
across workers without changing the output.

Desk-scale replicate counts keep a full run in CPU-minutes; pass
``full_scale=True`` for the original counts (500 replicates, 1000 for
the coverage study).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import two_stage
from .baselines import adv_train_y, reference_risks
from .core import Dataset, FirstStage, ModelSpec
from .designs import DesignSpec, draw_theta0, generate, replicate_seed
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
from .exceptions import ContractViolationError
from .inference import confidence_intervals, error_decomposition, plugin_covariance
from .risk import C0, adversarial_risk, monte_carlo_risk, standard_risk
from .solver import solve

EIG_FLOOR = 1e-6
MASTER_SEED = 20240

# penalty-path floor for the n < p tables, matching the customary
# reference-tool default in that regime
_HIGH_DIM_LASSO = LassoConfig(lambda_min_ratio=0.01)


# ---------------------------------------------------------------------------
# closed forms for the isotropic covariance, used as the analytic column of
# the risk-curve experiment and as independent oracles in the test suite

def identity_adv_risk_curve(norm0: float, delta: float) -> float:
    """Minimal adversarial risk for Sigma = I: three-piece closed form."""
    s = norm0 * norm0
    if delta <= C0:
        return delta * delta * s
    if delta >= 1.0 / C0:
        return s
    return delta * delta * (1.0 - C0 * C0) / (delta * delta + 1.0 - 2.0 * delta * C0) * s


def identity_std_risk_curve(norm0: float, delta: float) -> float:
    """Standard risk of the robust optimum for Sigma = I."""
    s = norm0 * norm0
    if delta <= C0:
        return 0.0
    if delta >= 1.0 / C0:
        return s
    den = delta * delta + 1.0 - 2.0 * delta * C0
    return delta * delta * (delta - C0) ** 2 / (den * den) * s


def identity_lambda_star(delta: float) -> float:
    """Optimal penalty for Sigma = I on the interior budget range."""
    return (delta * delta - delta * C0) / (1.0 - delta * C0)


# ---------------------------------------------------------------------------
# result container, aggregation, CSV output

@dataclass(frozen=True)
class ExperimentResult:
    experiment: str
    design: str
    estimator: str
    n: int
    p: int
    delta: float
    replicate: int
    metrics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        bad = [k for k, v in self.metrics.items() if not math.isfinite(v)]
        if bad:
            raise ContractViolationError(
                f"non-finite metrics {bad} in {self.experiment}/{self.estimator} "
                f"replicate {self.replicate}")


def summarize(results: list[ExperimentResult]) -> list[dict]:
    """Aggregate replicate metrics into mean and sample-SD columns.

    Groups by (experiment, design, estimator, n, p, delta) in order of
    first appearance. Single-replicate groups report SD 0.
    """
    groups: dict[tuple, list[ExperimentResult]] = {}
    for r in results:
        key = (r.experiment, r.design, r.estimator, r.n, r.p, r.delta)
        groups.setdefault(key, []).append(r)
    rows = []
    for key, members in groups.items():
        metric_names = sorted({name for m in members for name in m.metrics})
        row = {
            "experiment": key[0], "design": key[1], "estimator": key[2],
            "n": key[3], "p": key[4], "delta": key[5], "n_reps": len(members),
        }
        for name in metric_names:
            vals = np.array([m.metrics[name] for m in members if name in m.metrics])
            row[f"mean_{name}"] = float(np.mean(vals))
            row[f"sd_{name}"] = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        rows.append(row)
    return rows


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_replicates_csv(path: str, results: list[ExperimentResult]) -> None:
    metric_names = sorted({name for r in results for name in r.metrics})
    header = ["experiment", "design", "estimator", "n", "p", "delta", "replicate"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header + metric_names)
        for r in results:
            base = [r.experiment, r.design, r.estimator, r.n, r.p,
                    _format_cell(float(r.delta)), r.replicate]
            writer.writerow(base + [
                _format_cell(r.metrics[m]) if m in r.metrics else "" for m in metric_names])


def write_summary_csv(path: str, rows: list[dict]) -> None:
    columns = ["experiment", "design", "estimator", "n", "p", "delta", "n_reps"]
    extra = sorted({k for row in rows for k in row} - set(columns))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns + extra)
        for row in rows:
            writer.writerow([
                _format_cell(float(row[c])) if c == "delta" else _format_cell(row.get(c, ""))
                for c in columns
            ] + [_format_cell(row[k]) if k in row else "" for k in extra])


# ---------------------------------------------------------------------------
# individual experiments

def _risk_row(name, design, est, n, p, delta, rep, theta, model, opt_risk, theta_star):
    adv = adversarial_risk(theta, model, delta)
    return ExperimentResult(
        experiment=name, design=design, estimator=est, n=n, p=p,
        delta=delta, replicate=rep,
        metrics={
            "adv_risk": adv,
            "std_risk": standard_risk(theta, model),
            "excess_risk": adv - opt_risk,
            "est_err_sq": float(np.sum((theta - theta_star) ** 2)),
        },
    )


def _run_fig1(n, p, delta_grid, reps, seed):
    """Closed-form vs solver-pipeline vs Monte-Carlo risk curves."""
    design = DesignSpec(kind="identity", p=p, noise_var=0.0)
    results = []
    for rep in range(reps):
        ss = replicate_seed(seed, "fig1", rep)
        rng = np.random.default_rng(ss)
        theta0 = draw_theta0(design, rng)
        model = ModelSpec(theta0=theta0, sigma=np.eye(p), noise_var=0.0)
        norm0 = float(np.linalg.norm(theta0))
        mc_seeds = ss.spawn(len(delta_grid))
        for di, delta in enumerate(delta_grid):
            sol = solve(theta0, model.sigma, delta)
            pipeline_risk = adversarial_risk(sol.theta, model, delta)
            mc_mean, mc_se = monte_carlo_risk(sol.theta, model, delta, n, mc_seeds[di])
            lam = sol.lambda_star
            results.extend([
                ExperimentResult("fig1", "identity", "closed_form", n, p, delta, rep,
                                 {"adv_risk": identity_adv_risk_curve(norm0, delta),
                                  "std_risk": identity_std_risk_curve(norm0, delta)}),
                ExperimentResult("fig1", "identity", "solver_pipeline", n, p, delta, rep,
                                 {"adv_risk": pipeline_risk,
                                  "std_risk": standard_risk(sol.theta, model),
                                  "lambda_star": lam if math.isfinite(lam) else -1.0}),
                ExperimentResult("fig1", "identity", "monte_carlo", n, p, delta, rep,
                                 {"adv_risk": mc_mean, "adv_risk_se": mc_se}),
            ])
    return results


def _run_fig2(n, p, delta_grid, reps, seed):
    """Generalization gap vs its leading-term decomposition."""
    design = DesignSpec(kind="identity", p=p, noise_var=1.0)
    results = []
    for rep in range(reps):
        ss = replicate_seed(seed, "fig2", rep)
        model, data = generate(design, n, seed=ss)
        fs = ols(data)
        for delta in delta_grid:
            fitted = two_stage.fit(fs, delta)
            gap = adversarial_risk(fitted.theta, model, delta) - two_stage.empirical_risk(
                fitted.theta, fs, delta)
            terms = error_decomposition(fs, model, delta)
            e1_sum = terms.e1_sigma + terms.e1_theta0
            results.append(ExperimentResult(
                "fig2", "identity", "ols", n, p, delta, rep,
                metrics={
                    "gap": gap,
                    "e1_sigma": terms.e1_sigma,
                    "e1_theta0": terms.e1_theta0,
                    "e2_sigma": terms.e2_sigma,
                    "e2_theta0": terms.e2_theta0,
                    "e1_sum": e1_sum,
                    "abs_gap": abs(gap),
                    "abs_e1_sum": abs(e1_sum),
                    "abs_err": abs(gap - e1_sum),
                    "c_sigma": terms.c_sigma,
                    "c_theta0": terms.c_theta0,
                }))
    return results


COVERAGE_SIGMA = ((1.0, 0.5), (0.5, 2.0))
COVERAGE_THETA0 = (1.0, 2.0)


def _run_coverage(n, p, delta_grid, reps, seed):
    """Empirical coverage of normal intervals for the robust optimum."""
    design = DesignSpec(kind="custom", p=2, theta0_kind="fixed",
                        theta0_fixed=COVERAGE_THETA0, sigma_fixed=COVERAGE_SIGMA,
                        noise_var=1.0)
    model = ModelSpec(theta0=np.array(COVERAGE_THETA0),
                      sigma=np.array(COVERAGE_SIGMA), noise_var=1.0)
    stars = {delta: solve(model.theta0, model.sigma, delta).theta for delta in delta_grid}
    results = []
    for rep in range(reps):
        ss = replicate_seed(seed, "coverage", rep)
        _, data = generate(design, n, seed=ss)
        fs = ols(data)
        for delta in delta_grid:
            sol = two_stage.fit(fs, delta)
            cov = plugin_covariance(fs, sol, data)
            ci = confidence_intervals(sol.theta, cov, 0.95)
            star = stars[delta]
            metrics = {}
            for i in range(2):
                metrics[f"cover_{i + 1}"] = float(ci[i, 0] <= star[i] <= ci[i, 1])
                metrics[f"theta_hat_{i + 1}"] = float(sol.theta[i])
                metrics[f"ci_width_{i + 1}"] = float(ci[i, 1] - ci[i, 0])
            results.append(ExperimentResult(
                "coverage", "fig3", "ols_two_stage", n, 2, delta, rep, metrics))
    return results


def _first_stage_rows(name, design_tag, n, p, delta_grid, rep, model,
                      stages: dict[str, FirstStage], flags: dict[str, str] | None = None):
    """Shared table body: reference points plus two-stage fits per stage."""
    rows = []
    for delta in delta_grid:
        star = solve(model.theta0, model.sigma, delta).theta
        opt = adversarial_risk(star, model, delta)
        rows.append(_risk_row(name, design_tag, "true", n, p, delta, rep,
                              star, model, opt, star))
        for est, fs in stages.items():
            theta = two_stage.fit(fs, delta).theta
            row = _risk_row(name, design_tag, est, n, p, delta, rep,
                            theta, model, opt, star)
            if flags and est in flags:
                row.metrics["infeasible"] = 1.0
            rows.append(row)
        refs = reference_risks(model, delta)
        rows.append(ExperimentResult(name, design_tag, "theta0", n, p, delta, rep,
                                     {"adv_risk": refs.at_theta0,
                                      "std_risk": standard_risk(model.theta0, model),
                                      "excess_risk": refs.at_theta0 - opt}))
        rows.append(ExperimentResult(name, design_tag, "zero", n, p, delta, rep,
                                     {"adv_risk": refs.at_zero,
                                      "std_risk": standard_risk(np.zeros(p), model),
                                      "excess_risk": refs.at_zero - opt}))
    return rows


def _run_table1(n, p, delta_grid, reps, seed):
    """Dense coefficients: OLS vs L1 first stages, each with its own
    sample covariance."""
    design = DesignSpec(kind="dense", p=p, r=0.1, noise_var=1.0)
    results = []
    for rep in range(reps):
        ss = replicate_seed(seed, "table1", rep)
        lasso_seed = int(ss.generate_state(1)[0])
        model, data = generate(design, n, seed=ss)
        stages = {
            "ols": ols(data),
            "lasso": lasso_cv(data, seed=lasso_seed),
        }
        results.extend(_first_stage_rows("table1", "dense_r0.1", n, p,
                                         delta_grid, rep, model, stages))
    return results


def _min_norm_theta(data: Dataset) -> np.ndarray:
    theta, *_ = np.linalg.lstsq(data.x, data.y, rcond=None)
    return theta


def _run_table2(n, p, delta_grid, reps, seed, sparsity=10):
    """Sparse coefficients in high dimension, known and estimated covariance.

    With n < p the plain least squares column is infeasible; it is
    reported as the minimum-norm solution and flagged.
    """
    design = DesignSpec(kind="dense", p=p, r=0.1, theta0_kind="sparse",
                        sparsity=sparsity, noise_var=1.0)
    results = []
    for rep in range(reps):
        ss = replicate_seed(seed, "table2", rep)
        lasso_seed = int(ss.generate_state(1)[0])
        model, data = generate(design, n, seed=ss)
        fs_lasso = lasso_cv(data, _HIGH_DIM_LASSO, seed=lasso_seed)
        theta_mn = _min_norm_theta(data)
        resid = data.y - data.x @ theta_mn
        mn_var = float(resid @ resid) / max(n - p, 1)
        sigma_sample = pd_repair(sample_cov(data.x), EIG_FLOOR)
        stages = {
            "lasso_known": FirstStage(fs_lasso.theta0_hat, model.sigma,
                                      fs_lasso.noise_var_hat),
            "lasso_sample": FirstStage(fs_lasso.theta0_hat, sigma_sample,
                                       fs_lasso.noise_var_hat),
            "ols_known": FirstStage(theta_mn, model.sigma, mn_var),
            "ols_sample": FirstStage(theta_mn, sigma_sample, mn_var),
        }
        flags = {"ols_known": "minnorm", "ols_sample": "minnorm"} if n < p else None
        results.extend(_first_stage_rows("table2", "dense_r0.1_sparse10", n, p,
                                         delta_grid, rep, model, stages, flags))
    return results


def _run_table3(n, p, delta_grid, reps, seed, alpha=0.2, sparsity=10):
    """Sample vs tapered covariance with known coefficients."""
    designs = {
        "dense_r0.6": DesignSpec(kind="dense", p=p, r=0.6, theta0_kind="sparse",
                                 sparsity=sparsity, noise_var=1.0),
        "sparse_r0.6": DesignSpec(kind="sparse", p=p, r=0.6, alpha=alpha,
                                  theta0_kind="sparse", sparsity=sparsity,
                                  noise_var=1.0),
    }
    cfg = SparseCovConfig(alpha=alpha, eig_floor=EIG_FLOOR)
    results = []
    for tag, design in designs.items():
        for rep in range(reps):
            ss = replicate_seed(seed, f"table3_{tag}", rep)
            model, data = generate(design, n, seed=ss)
            stages = {
                "sample_cov": FirstStage(model.theta0,
                                         pd_repair(sample_cov(data.x), EIG_FLOOR),
                                         design.noise_var),
                "sparse_cov": FirstStage(model.theta0, sparse_cov(data.x, cfg),
                                         design.noise_var),
            }
            results.extend(_first_stage_rows("table3", tag, n, p, delta_grid,
                                             rep, model, stages))
    return results


def _run_baseline_grid(n, p, delta_grid, reps, seed, r_grid=(0.01, 0.02, 0.1, 0.2)):
    """Two-stage estimator against naive covariance and direct training."""
    results = []
    for r in r_grid:
        design = DesignSpec(kind="dense", p=p, r=r, noise_var=1.0)
        tag = f"dense_r{r}"
        for rep in range(reps):
            ss = replicate_seed(seed, f"baseline_{r}", rep)
            model, data = generate(design, n, seed=ss)
            fs_emp = ols(data)
            fs_mag = FirstStage(fs_emp.theta0_hat,
                                scaled_identity_cov(fs_emp.sigma_hat),
                                fs_emp.noise_var_hat)
            for delta in delta_grid:
                star = solve(model.theta0, model.sigma, delta).theta
                opt = adversarial_risk(star, model, delta)
                rows = [
                    ("true", star),
                    ("emp", two_stage.fit(fs_emp, delta).theta),
                    ("mag", two_stage.fit(fs_mag, delta).theta),
                    ("adv_train_y", adv_train_y(data, delta)),
                    ("theta0", model.theta0),
                    ("zero", np.zeros(p)),
                ]
                for est, theta in rows:
                    results.append(_risk_row("baseline_grid", tag, est, n, p,
                                             delta, rep, theta, model, opt, star))
    return results


def _run_rate_scan(n_grid, p, delta, reps, seed):
    """Estimation-error decay in the sample size at a fixed budget."""
    design = DesignSpec(kind="dense", p=p, r=0.1, noise_var=1.0)
    results = []
    for n in n_grid:
        for rep in range(reps):
            ss = replicate_seed(seed, f"rate_{n}", rep)
            model, data = generate(design, n, seed=ss)
            fs = ols(data)
            star = solve(model.theta0, model.sigma, delta).theta
            opt = adversarial_risk(star, model, delta)
            theta = two_stage.fit(fs, delta).theta
            results.append(_risk_row("rate_scan", "dense_r0.1", "ols_two_stage",
                                     n, p, delta, rep, theta, model, opt, star))
    return results


def _run_unlabeled(n, p, delta, reps, seed, sparsity=10):
    """Effect of unlabeled covariate rows on the covariance stage."""
    design = DesignSpec(kind="dense", p=p, r=0.1, theta0_kind="sparse",
                        sparsity=sparsity, noise_var=1.0)
    results = []
    for rep in range(reps):
        ss = replicate_seed(seed, "unlabeled", rep)
        lasso_seed = int(ss.generate_state(1)[0])
        model, data = generate(design, n, n_unlabeled=n, seed=ss)
        labeled_only = Dataset(x=data.x, y=data.y)
        fs0 = lasso_cv(labeled_only, _HIGH_DIM_LASSO, seed=lasso_seed)
        star = solve(model.theta0, model.sigma, delta).theta
        opt = adversarial_risk(star, model, delta)
        arms = {
            "labeled_only": pd_repair(sample_cov(data.x), EIG_FLOOR),
            "with_unlabeled": pd_repair(
                sample_cov(np.vstack([data.x, data.x_unlabeled])), EIG_FLOOR),
        }
        for est, sigma_hat in arms.items():
            fs = FirstStage(fs0.theta0_hat, sigma_hat, fs0.noise_var_hat)
            theta = two_stage.fit(fs, delta).theta
            results.append(_risk_row("unlabeled", "dense_r0.1_sparse10", est, n, p,
                                     delta, rep, theta, model, opt, star))
    return results


# ---------------------------------------------------------------------------
# registry and front door

_FULL_SCALE_REPS = {"coverage": 1000}

EXPERIMENTS = {
    "fig1": dict(n=10_000, p=10, reps=1,
                 delta_grid=(0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6)),
    "fig2": dict(n=1000, p=10, reps=200,
                 delta_grid=(0.2, 0.4, 0.6, 0.95, 1.1, 1.25, 1.4, 1.7, 2.0)),
    "coverage": dict(n=1000, p=2, reps=300, delta_grid=(0.5, 1.0, 1.5)),
    "table1": dict(n=300, p=50, reps=100, delta_grid=(0.5, 0.8, 0.9)),
    "table2": dict(n=200, p=300, reps=50, delta_grid=(0.5, 1.0, 2.0, 3.0)),
    "table3": dict(n=200, p=300, reps=50, delta_grid=(2.0,)),
    "baseline_grid": dict(n=1000, p=10, reps=100,
                          delta_grid=(0.5, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.5, 1.8, 2.0)),
    "rate_scan": dict(n=None, p=10, reps=100, delta_grid=(1.0,),
                      n_grid=(500, 1000, 2000, 4000)),
    "unlabeled": dict(n=200, p=300, reps=100, delta_grid=(1.0,)),
}


def run_experiment(name: str, n: int | None = None, p: int | None = None,
                   delta_grid=None, reps: int | None = None,
                   seed: int = MASTER_SEED, full_scale: bool = False,
                   out_dir: str | None = None):
    """Run one named experiment; returns (replicate results, summary rows).

    When ``out_dir`` is given, writes ``<name>_replicates.csv`` and
    ``<name>_summary.csv`` there.
    """
    if name not in EXPERIMENTS:
        raise ContractViolationError(
            f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    cfg = dict(EXPERIMENTS[name])
    if n is not None:
        cfg["n"] = n
    if p is not None:
        cfg["p"] = p
    if delta_grid is not None:
        cfg["delta_grid"] = tuple(float(d) for d in delta_grid)
    if full_scale:
        cfg["reps"] = _FULL_SCALE_REPS.get(name, 500)
    if reps is not None:
        cfg["reps"] = reps

    if name == "fig1":
        results = _run_fig1(cfg["n"], cfg["p"], cfg["delta_grid"], cfg["reps"], seed)
    elif name == "fig2":
        results = _run_fig2(cfg["n"], cfg["p"], cfg["delta_grid"], cfg["reps"], seed)
    elif name == "coverage":
        results = _run_coverage(cfg["n"], cfg["p"], cfg["delta_grid"], cfg["reps"], seed)
    elif name == "table1":
        results = _run_table1(cfg["n"], cfg["p"], cfg["delta_grid"], cfg["reps"], seed)
    elif name == "table2":
        results = _run_table2(cfg["n"], cfg["p"], cfg["delta_grid"], cfg["reps"], seed)
    elif name == "table3":
        results = _run_table3(cfg["n"], cfg["p"], cfg["delta_grid"], cfg["reps"], seed)
    elif name == "baseline_grid":
        results = _run_baseline_grid(cfg["n"], cfg["p"], cfg["delta_grid"],
                                     cfg["reps"], seed)
    elif name == "rate_scan":
        results = _run_rate_scan(cfg["n_grid"], cfg["p"], cfg["delta_grid"][0],
                                 cfg["reps"], seed)
    else:
        results = _run_unlabeled(cfg["n"], cfg["p"], cfg["delta_grid"][0],
                                 cfg["reps"], seed)

    summary = summarize(results)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_replicates_csv(os.path.join(out_dir, f"{name}_replicates.csv"), results)
        write_summary_csv(os.path.join(out_dir, f"{name}_summary.csv"), summary)
    return results, summary

"""Command line interface.

Subcommands::

    advlin run <experiment> [--n --p --delta-grid --reps --seed --full-scale --out DIR]
    advlin fit --data FILE --delta D [--first-stage ols|lasso]
               [--cov sample|sparse|identity] [--alpha A] [--seed S]
    advlin risk --theta FILE --model FILE --delta D

Exit code 0 on success; any contract violation prints a message to
stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import two_stage
from .estimators import (
    SparseCovConfig,
    lasso_cv,
    ols,
    pd_repair,
    sample_cov,
    scaled_identity_cov,
    sparse_cov,
)
from .exceptions import AdvlinError
from .experiments import EXPERIMENTS, MASTER_SEED, run_experiment
from .core import FirstStage
from .modelio import read_data_csv, read_model_file, read_vector_file
from .risk import adversarial_prediction_risk, adversarial_risk, standard_risk
from .solver import thresholds


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="advlin",
                                     description="Adversarially robust linear regression toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named simulation experiment")
    run.add_argument("experiment", choices=sorted(EXPERIMENTS))
    run.add_argument("--n", type=int, default=None)
    run.add_argument("--p", type=int, default=None)
    run.add_argument("--delta-grid", type=str, default=None,
                     help="comma-separated attack budgets")
    run.add_argument("--reps", type=int, default=None)
    run.add_argument("--seed", type=int, default=MASTER_SEED)
    run.add_argument("--full-scale", action="store_true",
                     help="original replicate counts instead of desk scale")
    run.add_argument("--out", type=str, default=".", help="output directory")

    fit = sub.add_parser("fit", help="two-stage fit on a CSV dataset")
    fit.add_argument("--data", required=True, help="CSV: first column y, rest x")
    fit.add_argument("--delta", type=float, required=True)
    fit.add_argument("--first-stage", choices=("ols", "lasso"), default="ols")
    fit.add_argument("--cov", choices=("sample", "sparse", "identity"), default="sample")
    fit.add_argument("--alpha", type=float, default=0.2,
                     help="decay exponent for the tapered covariance")
    fit.add_argument("--seed", type=int, default=0, help="CV fold shuffle seed")

    risk = sub.add_parser("risk", help="evaluate closed-form risks of a coefficient vector")
    risk.add_argument("--theta", required=True, help="vector file, whitespace separated")
    risk.add_argument("--model", required=True, help="key-value model file")
    risk.add_argument("--delta", type=float, required=True)
    return parser


def _cmd_run(args) -> int:
    delta_grid = None
    if args.delta_grid:
        delta_grid = [float(tok) for tok in args.delta_grid.split(",") if tok.strip()]
    _, summary = run_experiment(args.experiment, n=args.n, p=args.p,
                                delta_grid=delta_grid, reps=args.reps,
                                seed=args.seed, full_scale=args.full_scale,
                                out_dir=args.out)
    print(f"{args.experiment}: wrote {args.experiment}_replicates.csv and "
          f"{args.experiment}_summary.csv to {args.out} ({len(summary)} summary rows)")
    return 0


def _cmd_fit(args) -> int:
    data = read_data_csv(args.data)
    if args.first_stage == "ols":
        fs = ols(data)
    else:
        fs = lasso_cv(data, seed=args.seed)
    if args.cov == "sparse":
        sigma_hat = sparse_cov(data.x, SparseCovConfig(alpha=args.alpha))
    elif args.cov == "identity":
        sigma_hat = scaled_identity_cov(sample_cov(data.x))
    else:
        sigma_hat = pd_repair(fs.sigma_hat, 1e-6)
    fs = FirstStage(fs.theta0_hat, sigma_hat, fs.noise_var_hat)
    sol = two_stage.fit(fs, args.delta)
    d1, d2 = thresholds(fs.theta0_hat, fs.sigma_hat)
    print(json.dumps({
        "theta": [float(v) for v in sol.theta],
        "lambda_star": None if math.isinf(sol.lambda_star) else sol.lambda_star,
        "regime": sol.regime.value,
        "delta": args.delta,
        "thresholds": [d1, d2],
        "first_stage": args.first_stage,
        "cov": args.cov,
        "noise_var_hat": fs.noise_var_hat,
    }))
    return 0


def _cmd_risk(args) -> int:
    theta = read_vector_file(args.theta)
    model = read_model_file(args.model)
    print(json.dumps({
        "adversarial_risk": adversarial_risk(theta, model, args.delta),
        "standard_risk": standard_risk(theta, model),
        "adversarial_prediction_risk": adversarial_prediction_risk(theta, model, args.delta),
        "delta": args.delta,
    }))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "fit":
            return _cmd_fit(args)
        return _cmd_risk(args)
    except AdvlinError as exc:
        print(f"advlin: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"advlin: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

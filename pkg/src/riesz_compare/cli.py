"""Command-line entry point: ``riesz-compare {generate,fit,experiment,equivalence}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from . import linear
from .basis import FeatureBuilder, build_features
from .data import (
    AteDgpConfig,
    ShiftDgpConfig,
    generate_ate_dgp,
    generate_shift_dgp,
    load_dataset_csv,
    write_dataset_csv,
)
from .errors import RieszError
from .evaluation import fit_outcome_model, plug_in_estimates
from .experiment import ESTIMATORS, EstimatorSpec, ExperimentConfig, fit_estimator, run_experiment
from .functional import FunctionalSpec

log = logging.getLogger("riesz_compare")


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _add_dgp_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data generation")
    g.add_argument("--dgp", choices=["ate", "shift"], default="ate")
    g.add_argument("--n", type=int, default=1000, help="sample size (source sample for shift)")
    g.add_argument("--p", type=int, default=3, help="covariate dimension (ate)")
    g.add_argument("--tau", type=float, default=1.0)
    g.add_argument("--propensity-coefs", type=_floats, default=None)
    g.add_argument("--outcome-coefs", type=_floats, default=None)
    g.add_argument("--clip", type=float, default=0.05)
    g.add_argument("--noise-sd", type=float, default=1.0)
    g.add_argument("--mu", type=float, default=1.0, help="mean shift (shift)")
    g.add_argument("--n-target", type=int, default=None, help="target sample size (shift); defaults to --n")
    g.add_argument("--seed", type=int, default=0)


def _generate(args):
    if args.dgp == "ate":
        defaults = AteDgpConfig()
        p = args.p
        prop = args.propensity_coefs or (defaults.propensity_coefs if p == defaults.p else (0.5,) * p)
        outc = args.outcome_coefs or (defaults.outcome_coefs if p == defaults.p else (1.0,) * p)
        cfg = AteDgpConfig(
            n=args.n, p=p, tau=args.tau, propensity_coefs=tuple(prop), propensity_clip=args.clip,
            outcome_coefs=tuple(outc), noise_sd=args.noise_sd, seed=args.seed,
        )
        return generate_ate_dgp(cfg)
    cfg = ShiftDgpConfig(
        n_source=args.n, n_target=args.n_target or args.n, mean_shift=args.mu, seed=args.seed, noise_sd=args.noise_sd
    )
    return generate_shift_dgp(cfg)


def cmd_generate(args) -> int:
    data = _generate(args)
    if data.aux_sample is not None and args.aux_out is None:
        raise RieszError("this DGP has a target sample; pass --aux-out to save it")
    write_dataset_csv(data, args.out, args.aux_out)
    log.info("wrote %d rows to %s", data.n, args.out)
    return 0


def cmd_fit(args) -> int:
    if args.data is not None:
        data = load_dataset_csv(args.data, aux_path=args.aux)
    else:
        data = _generate(args)
    functional = args.functional or ("ate" if data.treatment is not None else "shift-mean")
    spec = FunctionalSpec(functional)
    builder = FeatureBuilder.parse(args.basis)
    if args.standardize:
        builder = replace(builder, standardize=True)
    features = build_features(data, builder)
    est = EstimatorSpec(
        name=args.estimator, l2=args.l2, l1=args.l1, hidden=args.hidden, lr=args.lr,
        epochs=args.epochs, init_seed=args.init_seed,
    )
    result = fit_estimator(data, spec, features, est)
    report = {"estimator": est.name, "functional": functional, "basis": str(builder), "n": data.n}
    if data.outcome is not None:
        h_fit = fit_outcome_model(data, features, args.outcome_l2)
        m = plug_in_estimates(data, spec, result.alpha_hat, h_fit, features)
        report.update(
            rr_mse=m.rr_mse, weighting_estimate=m.weighting_estimate, dr_estimate=m.dr_estimate,
            estimand_truth=m.estimand_truth,
        )
    report["objective_value"] = result.objective_value
    fit_dict = result.fit.to_dict()
    fit_dict.update(estimator=est.name, basis=str(builder), functional=functional, seed=args.seed)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(fit_dict, fh, indent=2)
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    overrides = {}
    if args.output is not None:
        overrides["output_path"] = args.output
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.master_seed is not None:
        overrides["master_seed"] = args.master_seed
    if args.sample_sizes is not None:
        overrides["sample_sizes"] = args.sample_sizes
    if args.timing:
        overrides["record_runtime"] = True
    cfg = replace(cfg, **overrides)
    if cfg.output_path is None:
        raise RieszError("no output path; set output_path in the config or pass --output")
    rows = run_experiment(cfg)
    failed = sum(1 for r in rows if r.error)
    log.info("wrote %d rows (%d failed fits) to %s", len(rows), failed, cfg.output_path)
    return 0


def cmd_equivalence(args) -> int:
    records = linear.run_equivalence(
        instances=args.instances, n=args.n, d=args.d, max_cond=args.max_cond, l2_values=args.l2, seed=args.seed
    )
    worst = {}
    for rec in records:
        w = worst.setdefault(rec["l2"], {k: 0.0 for k in ("max_rel_diff", "min_value_rel", "norm_identity_rel")})
        for k in w:
            w[k] = max(w[k], rec[k])
    print("l2,instances,max_rel_diff,min_value_rel,norm_identity_rel")
    for l2, w in worst.items():
        print(f"{l2!r},{args.instances},{w['max_rel_diff']:.3e},{w['min_value_rel']:.3e},{w['norm_identity_rel']:.3e}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(records, fh, indent=1)
    ok = all(w["max_rel_diff"] <= args.tol for w in worst.values())
    return 0 if ok or not args.check else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riesz-compare", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset to CSV")
    _add_dgp_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--aux-out", default=None, help="CSV for the target-distribution sample (shift)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit one estimator and report metrics")
    _add_dgp_args(p)
    p.add_argument("--data", default=None, help="CSV dataset; generated from the DGP flags if omitted")
    p.add_argument("--aux", default=None, help="CSV target sample for --functional shift-mean")
    p.add_argument("--functional", choices=["ate", "shift-mean"], default=None)
    p.add_argument("--basis", default="poly-t:2", help="poly-t:K, poly:K or rff:count,bw[,seed]")
    p.add_argument("--standardize", action="store_true", help="z-score basis columns")
    p.add_argument("--estimator", choices=ESTIMATORS, default="riesz-loss")
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--l1", type=float, default=0.0)
    p.add_argument("--hidden", type=_ints, default=(32, 32))
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--init-seed", type=int, default=0)
    p.add_argument("--outcome-l2", type=float, default=0.0)
    p.add_argument("--out", default=None, help="write the fit as JSON")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("experiment", help="run a replicated experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", default=None)
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--master-seed", type=int, default=None)
    p.add_argument("--sample-sizes", type=_ints, default=None)
    p.add_argument("--timing", action="store_true", help="record runtime_ms (makes output nondeterministic)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("equivalence", help="compare Riesz-loss and Rayleigh fits on random instances")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--max-cond", type=float, default=1e6)
    p.add_argument("--l2", type=_floats, default=(0.0, 1e-3, 1e-1, 1.0))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--check", action="store_true", help="exit 1 if any difference exceeds --tol")
    p.add_argument("--out", default=None, help="write per-instance records as JSON")
    p.set_defaults(func=cmd_equivalence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (RieszError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"error: linear algebra failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``robust-bayes <command> ...``.

Every option can also be set through an environment variable named
``RB_<OPTION>`` (upper case, dashes as underscores), e.g. ``RB_SEED=7``.
Explicit flags win over the environment, which wins over built-in defaults.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .baselines import ESTIMATORS, CvConfig, PenaltySpec, cross_validate, fit_estimator, fit_penalized
from .bench import ExperimentPlan, consistency_contrast, emit_report, run_benchmark
from .distributions import RngStream
from .errors import ConfigError
from .gibbs import run_chain
from .io import (
    read_dataset_csv,
    save_dataset,
    write_dataset_csv,
    write_draws_csv,
    write_summary_json,
    write_truth_json,
)
from .model import GibbsConfig, PriorHyperparams
from .simulate import SimDesign, generate_dataset

log = logging.getLogger("robust_bayes")

ENV_PREFIX = "RB_"


def _int_list(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args):
    design = SimDesign(args.n, args.kappa, RngStream(args.seed, args.stream), theta_prior=args.theta_prior)
    data = generate_dataset(design)
    out = _out_dir(args.out)
    write_dataset_csv(data, out / "dataset.csv")
    write_truth_json(data, out / "truth.json")
    save_dataset(data, out / "dataset.npz")
    print(f"wrote n={data.n} p={data.p} dataset to {out}")
    return 0


def _hyper_for(data, kappa):
    return PriorHyperparams.scaled(data.n, kappa if kappa is not None else data.p / data.n)


def cmd_fit_bayes(args):
    data = read_dataset_csv(args.data)
    config = GibbsConfig(iterations=args.iters, burn_in=args.burn_in, thin=args.thin,
                         stream=RngStream(args.seed), theta_shape=args.theta_shape)
    draws = run_chain(data, _hyper_for(data, args.kappa), config,
                      checkpoint=args.checkpoint, checkpoint_every=args.checkpoint_every,
                      resume=args.checkpoint is not None)
    out = _out_dir(args.out)
    write_summary_json(draws, out / "posterior_summary.json")
    if not args.no_draws:
        write_draws_csv(draws, out / "draws.csv")
    print(f"{len(draws)} retained draws written to {out}")
    return 0


def cmd_fit_freq(args):
    data = read_dataset_csv(args.data)
    rng = RngStream(args.seed).generator()
    lam = None
    if args.estimator in ("ls", "lad"):
        beta = fit_estimator(args.estimator, data)
    elif args.lam is not None:
        loss, penalty = ESTIMATORS[args.estimator]
        lam = args.lam
        beta = fit_penalized(data, PenaltySpec(loss, penalty, lam))
    else:
        loss, penalty = ESTIMATORS[args.estimator]
        lam, beta = cross_validate(data, PenaltySpec(loss, penalty, "cross-validate"), CvConfig(), rng)
    out = _out_dir(args.out)
    path = out / "estimate.csv"
    with open(path, "w") as fh:
        fh.write("j,beta\n")
        for j, b in enumerate(beta, 1):
            fh.write(f"{j},{float(b)!r}\n")
    if lam is not None:
        (out / "lambda.json").write_text(json.dumps({"estimator": args.estimator, "lambda": float(lam)}))
    print(f"{args.estimator} estimate written to {path}")
    return 0


def _progress(cell):
    r = cell[0]
    log.info("n=%d kappa=%g rep=%d done", r.n, r.kappa, r.replication)


def cmd_benchmark(args):
    plan = ExperimentPlan.from_json(args.plan)
    if args.workers is not None:
        plan = ExperimentPlan.from_dict({**plan.to_dict(), "workers": args.workers})
    result = run_benchmark(plan, _progress)
    paths = emit_report(result, args.out)
    print((Path(args.out) / "errors.txt").read_text())
    print("report files: " + ", ".join(p.name for p in paths))
    return 0


def cmd_contrast(args):
    table, result = consistency_contrast(args.kappa, _int_list(args.n_list), args.reps,
                                         seed=args.seed, iterations=args.iters,
                                         workers=args.workers or 1, progress=_progress)
    emit_report(result, args.out)
    ns = _int_list(args.n_list)
    print("estimator  " + "  ".join(f"n={n:<8d}" for n in ns))
    for col, row in table.items():
        print(f"{col:<10} " + "  ".join(f"{row[n]:<10.4f}" for n in ns))
    return 0


def cmd_validate(args):
    from .validation import geweke_joint_test, moment_suite

    failed = False
    for check in moment_suite(args.draws, args.seed):
        status = "ok" if check.passed else "FAIL"
        failed |= not check.passed
        print(f"[{status}] {check.name}: z_mean={check.z_mean:+.2f} z_var={check.z_var:+.2f}")
    res = geweke_joint_test(n_cycles=args.cycles, seed=args.seed)
    for name, z in res.z.items():
        print(f"joint test {name}: z={z:+.2f}")
    ok = res.max_abs_z < 4.0
    failed |= not ok
    print(f"[{'ok' if ok else 'FAIL'}] joint test max |z| = {res.max_abs_z:.2f} (limit 4)")
    return 1 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="robust-bayes", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate one dataset with truth")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, default=0, help="replication id")
    s.add_argument("--theta-prior", choices=("theta2", "theta"), default="theta2")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit-bayes", help="run the Gibbs sampler on a dataset CSV")
    s.add_argument("--data", required=True)
    s.add_argument("--iters", type=int, default=1000)
    s.add_argument("--burn-in", type=int, default=None)
    s.add_argument("--thin", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--kappa", type=float, default=None, help="prior scaling ratio (default p/n)")
    s.add_argument("--theta-shape", choices=("joint", "paper-literal"), default="joint")
    s.add_argument("--checkpoint", default=None, help="checkpoint file (resumes if present)")
    s.add_argument("--checkpoint-every", type=int, default=100)
    s.add_argument("--no-draws", action="store_true", help="skip the draws CSV")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit_bayes)

    s = sub.add_parser("fit-freq", help="fit a frequentist baseline")
    s.add_argument("--data", required=True)
    s.add_argument("--estimator", choices=sorted(ESTIMATORS), required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--lambda", dest="lam", type=float, default=None)
    g.add_argument("--cv", action="store_true", help="choose lambda by cross-validation (default)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit_freq)

    s = sub.add_parser("benchmark", help="run an experiment plan (JSON)")
    s.add_argument("--plan", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("contrast", help="median errors of bayes and ls as n grows")
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--n-list", required=True, help="e.g. 200,800")
    s.add_argument("--reps", type=int, default=50)
    s.add_argument("--iters", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_contrast)

    s = sub.add_parser("validate", help="sampler moment checks and the joint test")
    s.add_argument("--cycles", type=int, default=100_000)
    s.add_argument("--draws", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_validate)
    return p


def _apply_env(parser, environ):
    """Turn RB_* variables into parser defaults (flags given later still win)."""
    subparsers = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    parsers = [parser] + [sp for a in subparsers for sp in a.choices.values()]
    for ps in parsers:
        for action in ps._actions:
            if not action.option_strings or action.dest in ("help", "command"):
                continue
            key = ENV_PREFIX + action.dest.upper()
            long = [o for o in action.option_strings if o.startswith("--")]
            if long:
                key = ENV_PREFIX + long[0][2:].upper().replace("-", "_")
            if key not in environ:
                continue
            raw = environ[key]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                value = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                value = action.type(raw) if action.type else raw
            ps.set_defaults(**{action.dest: value})
            action.required = False


def main(argv=None, environ=None):
    parser = build_parser()
    _apply_env(parser, os.environ if environ is None else environ)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

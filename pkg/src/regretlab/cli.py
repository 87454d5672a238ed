"""Command-line entry point: ``regretlab run|check|solve|validate``."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ExperimentConfig, load_config
from .environments import make_env
from .harness import CHECKS, run_checks, run_experiment, write_reports
from .mdp import InvalidMdpError, UsageError, load, validate_mdp
from .solvers import diameter, relative_value_iteration


def _load_instance(source: str):
    """An MDP from a text file if ``source`` is a path, else from a generator spec."""
    if os.path.exists(source):
        return load(source)
    return make_env(source)


def _experiment_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg.override(seeds=None if args.seed is None else (args.seed,), out=args.out,
                        jobs=args.jobs, preset=args.preset)


def cmd_run(args) -> int:
    cfg = _experiment_config(args)
    summary, results = run_experiment(cfg)
    for row in summary:
        print(f"{row['agent']}: mean final regret {row['mean_final_regret']:.6g} "
              f"(std {row['std_final_regret']:.6g}, {row['seeds']} seeds)")
    aborted = [r for r in results if r.error]
    for r in aborted:
        print(f"aborted: {r.agent} seed {r.seed}: {r.error}", file=sys.stderr)
    return 1 if aborted else 0


def cmd_check(args) -> int:
    cfg = load_config(args.config) if args.config else None
    if args.names:
        names = args.names
    elif cfg is not None:
        names = list(cfg.checks)
    else:
        names = []
    if names == ["all"]:
        names = list(CHECKS)
    seed = args.seed if args.seed is not None else (cfg.seeds[0] if cfg else 0)
    trials = args.trials if args.trials is not None else (cfg.trials if cfg else None)
    reports = run_checks(names, seed, trials)
    for report in reports:
        print(report)
    out = args.out or (cfg.out if cfg else None)
    if out:
        os.makedirs(out, exist_ok=True)
        write_reports(reports, os.path.join(out, "checks.csv"))
    else:
        write_reports(reports, sys.stdout)
    return 0 if all(r.passed for r in reports) else 1


def cmd_solve(args) -> int:
    m = _load_instance(args.instance).validated()
    gb, policy = relative_value_iteration(m)
    print(f"gain {gb.gain!r}")
    print(f"bias_span {gb.span!r}")
    print(f"diameter {diameter(m)!r}")
    print("policy " + " ".join(str(int(a)) for a in policy))
    print("bias " + " ".join(repr(float(x)) for x in np.asarray(gb.bias)))
    return 0


def cmd_validate(args) -> int:
    m = _load_instance(args.instance)
    problems = validate_mdp(m)
    for p in problems:
        print(p)
    if not problems:
        print(f"ok: {m.num_states} states, {m.num_actions} actions")
    return 1 if problems else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regretlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value experiment config file")
        p.add_argument("--seed", type=int, help="single seed, overriding the config")
        p.add_argument("--out", help="output directory")

    run = sub.add_parser("run", help="run agents over a seed grid and write traces")
    common(run)
    run.add_argument("--jobs", type=int, help="worker processes")
    run.add_argument("--preset", choices=("theory", "practical"), help="psrl parameter preset")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="run named Monte-Carlo checks ('all' for every one)")
    common(check)
    check.add_argument("names", nargs="*", help=f"check names: {', '.join(CHECKS)}")
    check.add_argument("--trials", type=int, help="trial count override")
    check.set_defaults(func=cmd_check)

    solve = sub.add_parser("solve", help="optimal gain and diameter of one instance")
    solve.add_argument("instance", help="MDP text file or generator spec such as riverswim:n_states=6")
    solve.set_defaults(func=cmd_solve)

    validate = sub.add_parser("validate", help="validate an MDP file or generator spec")
    validate.add_argument("instance")
    validate.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidMdpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

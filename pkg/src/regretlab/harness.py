"""Fan-out of agent runs over seeds, and the named registry of Monte-Carlo checks."""

from __future__ import annotations

import csv
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import verify as V
from .agents import RunAbortedError, run_psrl, run_ucrl2_baseline
from .config import ExperimentConfig
from .environments import make_env, make_riverswim, make_two_state_chain
from .mdp import UsageError
from .sampling import PsrlConfig
from .solvers import min_hitting_times, relative_value_iteration

SUMMARY_COLUMNS = ("agent", "env", "T", "seeds", "mean_final_regret", "std_final_regret")


def trace_filename(agent: str, seed: int) -> str:
    return f"trace_{agent}_seed{seed}.csv"


@dataclass(frozen=True)
class RunResult:
    agent: str
    seed: int
    final_regret: float | None
    path: str
    error: str | None = None


def _psrl_config(cfg: ExperimentConfig, env) -> PsrlConfig:
    return PsrlConfig.from_preset(cfg.preset, env.num_states, env.num_actions, cfg.horizon, cfg.rho)


def run_single(cfg: ExperimentConfig, agent: str, seed: int, lambda_star: float | None = None):
    """One (agent, seed) run; returns the trace."""
    env = make_env(cfg.env)
    if agent == "psrl":
        return run_psrl(env, _psrl_config(cfg, env), seed, lambda_star=lambda_star)
    if agent == "ucrl2":
        return run_ucrl2_baseline(env, cfg.delta, seed, cfg.horizon, lambda_star=lambda_star)
    raise UsageError(f"unknown agent {agent!r}")


def _run_and_write(cfg: ExperimentConfig, agent: str, seed: int, lambda_star: float) -> RunResult:
    path = os.path.join(cfg.out, trace_filename(agent, seed))
    try:
        trace = run_single(cfg, agent, seed, lambda_star)
    except RunAbortedError as exc:
        return RunResult(agent, seed, None, path, str(exc))
    trace.write_csv(path)
    return RunResult(agent, seed, float(trace.cumulative_regret[-1]), path)


def _prepare_out(out: str) -> None:
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out!r}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise UsageError(f"output directory {out!r} is not writable")


def run_experiment(cfg: ExperimentConfig) -> tuple[list[dict], list[RunResult]]:
    """Run every (agent, seed) pair, write one trace per pair and ``summary.csv``.

    Results are keyed by (agent, seed), so the files do not depend on
    ``cfg.jobs`` or on completion order.
    """
    _prepare_out(cfg.out)
    env = make_env(cfg.env)
    lambda_star = relative_value_iteration(env)[0].gain
    tasks = [(agent, seed) for agent in cfg.agents for seed in cfg.seeds]
    if cfg.jobs == 1:
        results = [_run_and_write(cfg, a, s, lambda_star) for a, s in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_and_write, cfg, a, s, lambda_star) for a, s in tasks]
            results = [f.result() for f in futures]
    summary = []
    for agent in cfg.agents:
        finals = np.array([r.final_regret for r in results
                           if r.agent == agent and r.error is None], dtype=np.float64)
        summary.append({
            "agent": agent, "env": cfg.env, "T": cfg.horizon, "seeds": len(finals),
            "mean_final_regret": float(finals.mean()) if finals.size else math.nan,
            "std_final_regret": float(finals.std(ddof=1)) if finals.size > 1 else 0.0,
        })
    with open(os.path.join(cfg.out, "summary.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in summary:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return summary, results


# named checks at their default instances

def _beta_anti(rng, trials):
    return [V.check_beta_anticoncentration(6, 6, 0.5, trials or 10**5, rng)]


def _dirichlet_anti(rng, trials):
    return [V.check_dirichlet_anticoncentration(np.array([0.5, 0.5]), np.array([1.0, 0.0]), 100,
                                                trials or 10**5, rng)]


def _stickbreaking_anti(rng, trials):
    return [V.check_stickbreaking_anticoncentration(np.full(5, 0.2),
                                                    np.array([0.8, -0.3, 0.5, -0.9, 0.0]), 100,
                                                    trials or 10**5, rng)]


def _riverswim_row():
    return make_riverswim(6).transitions[2, 1]


def _simple_sampling(rng, trials):
    return list(V.check_simple_sampling_optimism(_riverswim_row(), np.linspace(0, 1, 6), 50,
                                                 trials or 10**5, rng))


def _posterior_optimism(rng, trials):
    cfg = PsrlConfig.theory(2, 1, 10**4)
    n = 12 * math.ceil(cfg.omega) * 4 + 1
    return [V.check_posterior_optimism_rate(np.array([0.3, 0.7]), np.array([1.0, 0.0]), n, cfg,
                                            trials or 10**4, rng)]


def _posterior_amplification(rng, trials):
    cfg = PsrlConfig.theory(3, 2, 10**4)
    n = 12 * math.ceil(cfg.omega) * 9 + 1
    return [V.check_posterior_optimism_amplification(np.array([0.2, 0.3, 0.5]),
                                                     np.array([0.0, 0.5, 1.0]), n, cfg, 2,
                                                     trials or 10**4, rng)]


def _deviation(branch, n):
    def run(rng, trials):
        cfg = PsrlConfig.practical(4, 2, 10**5)
        return [V.check_deviation_bound(np.array([0.1, 0.2, 0.3, 0.4]), n, cfg, trials or 10**4,
                                        rng, num_actions=2, branch=branch)]
    return run


def _dirichlet_concentration(rng, trials):
    return list(V.check_dirichlet_concentration(np.array([0.2, 0.3, 0.5]), 200, 1.0, 0.05,
                                                trials or 10**5, rng))


def _extended_diameter(rng, trials):
    env = make_two_state_chain(0.5, 0.5)
    cfg = PsrlConfig.theory(2, 1, 10**4)
    seeds = [int(x) for x in rng.integers(0, 2**31, size=10)]
    return [V.check_extended_diameter(env, cfg, None, seeds)]


def _sample_pessimism(rng, trials):
    env = make_riverswim(6)
    h = min_hitting_times(env, 5).times
    cfg = PsrlConfig.practical(6, 2, 10**5)
    return [V.check_sample_pessimism(env.transitions[2, 1], h, 50, cfg, trials or 10**4, rng)]


def _bernstein(rng, trials):
    return [V.check_bernstein_martingale(100, 0.1, trials or 10**5, rng)]


def _chernoff(rng, trials):
    return [V.check_chernoff(0.3, 500, 0.05, trials or 10**5, rng)]


CHECKS: dict[str, Callable] = {
    "beta_anti": _beta_anti,
    "dirichlet_anti": _dirichlet_anti,
    "stickbreaking_anti": _stickbreaking_anti,
    "simple_sampling": _simple_sampling,
    "posterior_optimism": _posterior_optimism,
    "posterior_amplification": _posterior_amplification,
    "deviation_dirichlet": _deviation("dirichlet", 10**4),
    "deviation_simple": _deviation("simple", 10),
    "dirichlet_concentration": _dirichlet_concentration,
    "extended_diameter": _extended_diameter,
    "sample_pessimism": _sample_pessimism,
    "bernstein": _bernstein,
    "chernoff": _chernoff,
}


def check_rng(name: str, seed: int) -> np.random.Generator:
    """Stream for one named check; independent of which other checks run."""
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def run_checks(names, seed: int = 0, trials: int | None = None) -> list[V.CheckReport]:
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise UsageError(f"unknown check(s) {unknown}; known: {sorted(CHECKS)}")
    reports = []
    for name in names:
        reports.extend(CHECKS[name](check_rng(name, seed), trials))
    return reports


def write_reports(reports, path_or_file) -> None:
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(V.REPORT_COLUMNS)
        for report in reports:
            writer.writerow(report.row())
    finally:
        if own:
            fh.close()

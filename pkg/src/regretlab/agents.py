"""Online learning loops: the optimistic posterior-sampling agent and a UCRL2 baseline."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .extended import build_extended, map_extended_policy, solve_extended
from .mdp import Mdp, transition_cdf
from .sampling import PsrlConfig, TransitionCounts
from .solvers import (DAMPING, DEFAULT_MAX_ITER, NonConvergenceError,
                      relative_value_iteration)

TRACE_COLUMNS = ("t", "reward", "cumulative_regret", "epoch_index")


class RunAbortedError(RuntimeError):
    """An agent's planner failed to converge even after the retry."""


@dataclass
class RegretTrace:
    """Per-round record of one run; rounds and epoch starts are 1-indexed."""

    rewards: np.ndarray
    epoch_starts: list[int]
    optimal_gain: float
    cumulative_regret: np.ndarray
    actions: np.ndarray | None = None
    agent: str = ""
    info: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.rewards)

    @property
    def num_epochs(self) -> int:
        return len(self.epoch_starts)

    def epoch_index(self) -> np.ndarray:
        """Epoch number (starting at 1) of every round."""
        rounds = np.arange(1, self.horizon + 1)
        return np.searchsorted(np.asarray(self.epoch_starts), rounds, side="right")

    def write_csv(self, path: str | os.PathLike) -> None:
        epochs = self.epoch_index()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for t in range(self.horizon):
                writer.writerow((t + 1, repr(float(self.rewards[t])),
                                 repr(float(self.cumulative_regret[t])), int(epochs[t])))


def read_trace_csv(path: str | os.PathLike) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {
        "t": np.array([int(r["t"]) for r in rows]),
        "reward": np.array([float(r["reward"]) for r in rows]),
        "cumulative_regret": np.array([float(r["cumulative_regret"]) for r in rows]),
        "epoch_index": np.array([int(r["epoch_index"]) for r in rows]),
    }


def compute_regret(rewards, lambda_star: float) -> np.ndarray:
    """Cumulative regret ``lambda_star * t - sum of the first t rewards`` for every t."""
    rewards = np.asarray(rewards, dtype=np.float64)
    rounds = np.arange(1, len(rewards) + 1, dtype=np.float64)
    return lambda_star * rounds - np.cumsum(rewards)


def epoch_should_break(counts: TransitionCounts, epoch_start_counts, s: int, a: int) -> bool:
    """True once the visit count of ``(s, a)`` reaches twice its epoch-start value."""
    return bool(counts.total[s, a] >= 2 * np.asarray(epoch_start_counts)[s, a])


def _streams(seed):
    env_seq, agent_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(env_seq)), np.random.Generator(np.random.PCG64(agent_seq))


def _optimal_gain(env: Mdp, lambda_star):
    if lambda_star is not None:
        return float(lambda_star)
    return relative_value_iteration(env, 1e-8)[0].gain


def _plan_with_retry(plan, max_iter):
    try:
        return plan(max_iter)
    except NonConvergenceError:
        try:
            return plan(2 * max_iter)
        except NonConvergenceError as exc:
            raise RunAbortedError(f"planner failed twice: {exc}") from exc


def _run_epochs(env: Mdp, horizon: int, seed, make_policy, agent: str, lambda_star):
    """Shared epoch loop: ``make_policy(k, tau, counts, rng)`` returns the epoch's policy."""
    env_rng, agent_rng = _streams(seed)
    uniforms = env_rng.random(horizon)
    S, A = env.num_states, env.num_actions
    counts = TransitionCounts.zeros(S, A)
    cdf = transition_cdf(env.transitions)
    rewards_table = np.ascontiguousarray(env.rewards)
    rewards = np.zeros(horizon)
    actions = np.zeros(horizon, dtype=np.int64)
    epoch_starts = []
    t, state = 0, env.start_state
    rollout = kernels.backend.rollout_epoch
    while t < horizon:
        tau = t + 1
        epoch_starts.append(tau)
        policy = np.ascontiguousarray(make_policy(len(epoch_starts), tau, counts, agent_rng),
                                      dtype=np.int64)
        start_total = counts.total.copy()
        t, state = rollout(cdf, policy, rewards_table, counts.total, counts.by_next,
                           start_total, uniforms, t, state, rewards, actions)
    gain = _optimal_gain(env, lambda_star)
    return RegretTrace(rewards, epoch_starts, gain, compute_regret(rewards, gain),
                       actions, agent, {"seed": seed, "final_counts": counts})


def run_psrl(env: Mdp, cfg: PsrlConfig, seed, *, on_epoch: Callable | None = None,
             lambda_star: float | None = None, max_iter: int = DEFAULT_MAX_ITER) -> RegretTrace:
    """Run the optimistic posterior-sampling agent for ``cfg.horizon`` rounds.

    ``on_epoch(k, tau, counts, ext, ext_policy)`` is called after each epoch's
    plan is computed and before it is executed.
    """
    warm = {"h": None}

    def make_policy(k, tau, counts, rng):
        ext = build_extended(counts, env.rewards, cfg, rng)
        eps = 1.0 / math.sqrt(tau)
        _, bias, ext_policy = _plan_with_retry(
            lambda cap: solve_extended(ext, eps, h0=warm["h"], max_iter=cap), max_iter)
        warm["h"] = bias
        if on_epoch is not None:
            on_epoch(k, tau, counts, ext, ext_policy)
        return map_extended_policy(ext_policy)

    return _run_epochs(env, cfg.horizon, seed, make_policy, "psrl", lambda_star)


def ucrl2_radius(counts: TransitionCounts, tau: int, delta: float) -> np.ndarray:
    """L1 confidence radius ``sqrt(14 S log(2 A tau / delta) / max(1, N))``."""
    S, A = counts.total.shape
    return np.sqrt(14 * S * math.log(2 * A * tau / delta) / np.maximum(1, counts.total))


def run_ucrl2_baseline(env: Mdp, delta: float, seed, horizon: int, *,
                       lambda_star: float | None = None,
                       max_iter: int = DEFAULT_MAX_ITER) -> RegretTrace:
    """UCRL2 with known rewards: extended value iteration over L1 balls around the empirical model."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    warm = {"h": np.zeros(env.num_states)}

    def make_policy(k, tau, counts, rng):
        n = np.maximum(1, counts.total)[..., None]
        phat = np.ascontiguousarray(counts.by_next / n)
        d = np.ascontiguousarray(ucrl2_radius(counts, tau, delta))
        eps = 1.0 / math.sqrt(tau)

        def plan(cap):
            h, diff, policy, iters, status = kernels.backend.extended_value_iteration(
                np.ascontiguousarray(env.rewards), phat, d, warm["h"] / DAMPING, eps, cap, DAMPING)
            if status != kernels.CONVERGED:
                raise NonConvergenceError(f"extended value iteration hit {cap} iterations")
            return DAMPING * np.asarray(h), np.asarray(policy)

        h, policy = _plan_with_retry(plan, max_iter)
        warm["h"] = h - h.min()
        return policy

    return _run_epochs(env, horizon, seed, make_policy, "ucrl2", lambda_star)


def run_fixed_policy(env: Mdp, policy, horizon: int, seed, *,
                     lambda_star: float | None = None) -> RegretTrace:
    """Execute a stationary policy with the same environment stream as the agents."""
    policy = np.asarray(policy, dtype=np.int64)
    return _run_epochs(env, horizon, seed, lambda k, tau, counts, rng: policy, "fixed", lambda_star)

"""Exact planning on known MDPs: gain/bias, policy gain, hitting times, diameter."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import kernels
from .mdp import Mdp, UsageError, policy_rewards, policy_transition_matrix

DAMPING = 0.99
DEFAULT_EPSILON = 1e-8
DEFAULT_MAX_ITER = 10**6
HITTING_TOL = 1e-9
HITTING_BLOWUP = 1e9
ORACLE_LIMIT = 10**5


class NonConvergenceError(RuntimeError):
    """Value iteration hit its iteration cap."""


class MultichainError(ValueError):
    """A policy's chain has more than one recurrent class."""


class UnreachableTargetError(ValueError):
    """Some state cannot reach the requested target state."""


@dataclass(frozen=True)
class GainBias:
    gain: float
    bias: np.ndarray
    span: float
    iterations: int


@dataclass(frozen=True)
class HittingTimes:
    target: int
    times: np.ndarray


def solve_average_reward(r, P, epsilon=DEFAULT_EPSILON, max_iter=DEFAULT_MAX_ITER,
                         damping=DAMPING, h0=None):
    """Relative value iteration on raw ``(S, K)`` reward / ``(S, K, S)`` transition arrays.

    Works on any flattened action set, which is how the extended MDP reuses it.
    Returns ``(GainBias, policy)`` with the bias measured on the undamped model
    and shifted so its minimum is 0.
    """
    r = np.ascontiguousarray(r, dtype=np.float64)
    P = np.ascontiguousarray(P, dtype=np.float64)
    S = r.shape[0]
    if h0 is None:
        h0 = np.zeros(S)
    else:
        # the kernel iterates on the damped bias, which is the true bias / damping
        h0 = np.asarray(h0, dtype=np.float64) / damping
    h, diff, policy, iters, status = kernels.backend.relative_value_iteration(
        r, P, h0, float(epsilon), int(max_iter), float(damping))
    if status != kernels.CONVERGED:
        raise NonConvergenceError(
            f"relative value iteration did not reach span tolerance {epsilon:g} "
            f"within {max_iter} iterations (multichain or near-periodic model?)")
    bias = damping * np.asarray(h)
    bias = bias - bias.min()
    gain = 0.5 * (float(np.max(diff)) + float(np.min(diff)))
    span = float(bias.max() - bias.min())
    return GainBias(gain, bias, span, int(iters)), np.asarray(policy, dtype=np.int64)


def relative_value_iteration(m: Mdp, epsilon: float = DEFAULT_EPSILON,
                             max_iter: int = DEFAULT_MAX_ITER) -> tuple[GainBias, np.ndarray]:
    """Optimal gain, bias and greedy policy of ``m`` by damped relative value iteration.

    Before iterating, every row is mixed with a self-loop,
    ``P <- (1 - a) I + a P`` with ``a = 0.99``. Stationary distributions, and
    hence every policy's gain, are unchanged, while periodic chains become
    aperiodic. The iteration stops once the increment vector
    ``T h - h`` has span at most ``epsilon``. The gain is the midpoint of that
    vector, so it lies within ``epsilon / 2`` of the optimum.
    """
    return solve_average_reward(m.rewards, m.transitions, epsilon, max_iter)


def bellman_residual(r, P, gain, bias) -> np.ndarray:
    """``max_k (r + P h) - h - gain`` per state on the undamped model."""
    q = np.asarray(r) + np.asarray(P) @ np.asarray(bias)
    return q.max(axis=1) - bias - gain


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Unique stationary distribution of a unichain transition matrix."""
    S = P.shape[0]
    generator = P.T - np.eye(S)
    if S > 1 and np.linalg.matrix_rank(generator, tol=1e-10) < S - 1:
        raise MultichainError("transition matrix has more than one recurrent class")
    system = np.vstack([generator, np.ones((1, S))])
    rhs = np.zeros(S + 1)
    rhs[-1] = 1.0
    q, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    q = np.clip(q, 0.0, None)
    return q / q.sum()


def policy_gain(m: Mdp, policy) -> float:
    """Long-run average reward of a unichain deterministic policy."""
    P = policy_transition_matrix(m, policy)
    return float(stationary_distribution(P) @ policy_rewards(m, policy))


def _recurrent_class_gains(P: np.ndarray, r: np.ndarray) -> list[float]:
    n, labels = connected_components(P > 0, directed=True, connection="strong")
    gains = []
    for c in range(n):
        members = np.flatnonzero(labels == c)
        outside = np.ones(P.shape[0], bool)
        outside[members] = False
        if P[np.ix_(members, outside)].sum() > 0:
            continue  # transient class
        sub = P[np.ix_(members, members)]
        sub = sub / sub.sum(axis=1, keepdims=True)
        gains.append(float(stationary_distribution(sub) @ r[members]))
    return gains


def enumerate_policies_oracle(m: Mdp, limit: int = ORACLE_LIMIT) -> tuple[float, np.ndarray]:
    """Best gain over all A**S deterministic stationary policies, by brute force.

    Multichain policies are scored by their best recurrent class, which a
    communicating MDP can always reach.
    """
    S, A = m.num_states, m.num_actions
    if A**S > limit:
        raise UsageError(f"A**S = {A**S} exceeds the enumeration limit {limit}")
    best_gain, best_policy = -math.inf, None
    for choice in itertools.product(range(A), repeat=S):
        policy = np.array(choice, dtype=np.int64)
        P = policy_transition_matrix(m, policy)
        r = policy_rewards(m, policy)
        try:
            gain = float(stationary_distribution(P) @ r)
        except MultichainError:
            gain = max(_recurrent_class_gains(P, r))
        if gain > best_gain + 1e-12:
            best_gain, best_policy = gain, policy
    return best_gain, best_policy


def _can_reach(P: np.ndarray, target: int) -> np.ndarray:
    """Boolean mask of states with a positive-probability path to ``target``."""
    adjacency = (P > 0).any(axis=1)  # (S, S): some action moves s -> s'
    reach = np.zeros(P.shape[0], bool)
    reach[target] = True
    frontier = [target]
    while frontier:
        nxt = np.flatnonzero(adjacency[:, frontier].any(axis=1) & ~reach)
        reach[nxt] = True
        frontier = list(nxt)
    return reach


def min_hitting_times(m: Mdp, target: int, tol: float = HITTING_TOL,
                      max_iter: int = 10**7) -> HittingTimes:
    """Minimum expected number of steps to reach ``target`` from every state.

    Value iteration from zero on ``E = 1 + min_a P E`` is monotone, so no
    aperiodicity transform is needed here.
    """
    if not (0 <= target < m.num_states):
        raise UsageError(f"target {target} outside [0, {m.num_states})")
    P = np.ascontiguousarray(m.transitions)
    reach = _can_reach(P, target)
    if not reach.all():
        raise UnreachableTargetError(
            f"states {np.flatnonzero(~reach).tolist()} cannot reach state {target}")
    E, iters, status = kernels.backend.min_hitting_times(
        P, int(target), float(tol), int(max_iter), HITTING_BLOWUP)
    if status == kernels.DIVERGED:
        raise UnreachableTargetError(f"hitting times to state {target} exceed {HITTING_BLOWUP:g}")
    if status != kernels.CONVERGED:
        raise NonConvergenceError(f"hitting-time iteration did not converge in {max_iter} steps")
    return HittingTimes(int(target), np.asarray(E))


def diameter(m: Mdp) -> float:
    """Largest minimum expected travel time over ordered state pairs; inf if not communicating."""
    D = 0.0
    for target in range(m.num_states):
        try:
            times = min_hitting_times(m, target).times
        except UnreachableTargetError:
            return math.inf
        D = max(D, float(times.max()))
    return D

"""The extended MDP built from sampled transition vectors, and its solution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import Mdp
from .sampling import (PsrlConfig, TransitionCounts, sample_dirichlet,
                       simple_optimistic_from_counts)
from .solvers import DEFAULT_MAX_ITER, solve_average_reward


@dataclass(frozen=True)
class ExtendedMdp:
    """``samples[s, a, j]`` is the j-th sampled next-state distribution for ``(s, a)``.

    Extended action ``(a, j)`` has flat index ``a * psi + j``.
    """

    base_rewards: np.ndarray
    samples: np.ndarray
    posterior_mask: np.ndarray | None = None

    @property
    def num_states(self) -> int:
        return self.samples.shape[0]

    @property
    def num_actions(self) -> int:
        return self.samples.shape[1]

    @property
    def psi(self) -> int:
        return self.samples.shape[2]

    def flat_rewards(self) -> np.ndarray:
        return np.repeat(self.base_rewards, self.psi, axis=1)

    def flat_transitions(self) -> np.ndarray:
        S = self.num_states
        return self.samples.reshape(S, self.num_actions * self.psi, S)

    def to_mdp(self) -> Mdp:
        return Mdp(self.flat_transitions(), self.flat_rewards(), 0)


def build_extended(counts: TransitionCounts, rewards, cfg: PsrlConfig,
                   rng: np.random.Generator) -> ExtendedMdp:
    """Draw ``cfg.psi`` transition vectors for every pair.

    Pairs visited at least ``cfg.small_n`` times sample the boosted Dirichlet
    posterior; the rest use simple optimistic sampling. Posterior pairs are
    drawn first, then simple pairs, each in row-major ``(s, a)`` order.
    """
    S, A = counts.total.shape
    psi = cfg.psi
    samples = np.empty((S, A, psi, S))
    posterior = counts.total >= cfg.small_n
    if posterior.any():
        alpha = (counts.by_next[posterior] + cfg.omega) / cfg.kappa
        alpha = np.broadcast_to(alpha[:, None, :], (alpha.shape[0], psi, S))
        samples[posterior] = sample_dirichlet(alpha, rng)
    simple = ~posterior
    if simple.any():
        rows = counts.by_next[simple]
        rows = np.broadcast_to(rows[:, None, :], (rows.shape[0], psi, S))
        samples[simple] = simple_optimistic_from_counts(rows, rng)
    return ExtendedMdp(np.array(rewards, dtype=np.float64), samples, posterior)


def solve_extended(ext: ExtendedMdp, epsilon: float, h0=None,
                   max_iter: int = DEFAULT_MAX_ITER):
    """Optimal gain, bias and ``(action, sample)`` policy of the extended MDP."""
    gb, flat_policy = solve_average_reward(ext.flat_rewards(), ext.flat_transitions(),
                                           epsilon, max_iter, h0=h0)
    policy = np.stack(np.divmod(flat_policy, ext.psi), axis=1)
    return gb.gain, gb.bias, policy


def map_extended_policy(pi_ext) -> np.ndarray:
    """Drop the sample index from an ``(S, 2)`` array of ``(action, sample)`` pairs."""
    return np.asarray(pi_ext, dtype=np.int64)[:, 0].copy()

"""Transition-vector samplers for the two sampling branches, and deviation helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .mdp import UsageError


@dataclass
class TransitionCounts:
    """Visit counts ``total[s, a]`` and next-state counts ``by_next[s, a, i]``."""

    total: np.ndarray
    by_next: np.ndarray

    @classmethod
    def zeros(cls, num_states: int, num_actions: int) -> "TransitionCounts":
        return cls(np.zeros((num_states, num_actions), dtype=np.int64),
                   np.zeros((num_states, num_actions, num_states), dtype=np.int64))

    @classmethod
    def from_next_counts(cls, by_next) -> "TransitionCounts":
        by_next = np.asarray(by_next, dtype=np.int64)
        return cls(by_next.sum(axis=-1), by_next.copy())

    @property
    def num_states(self) -> int:
        return self.by_next.shape[0]

    @property
    def num_actions(self) -> int:
        return self.by_next.shape[1]

    def record(self, s: int, a: int, next_state: int) -> None:
        self.total[s, a] += 1
        self.by_next[s, a, next_state] += 1

    def copy(self) -> "TransitionCounts":
        return TransitionCounts(self.total.copy(), self.by_next.copy())

    def consistent(self) -> bool:
        return bool(np.array_equal(self.by_next.sum(axis=-1), self.total))


@dataclass(frozen=True)
class PsrlConfig:
    """Parameters of the optimistic posterior-sampling agent.

    ``small_n`` is the visit count at which a pair switches from simple
    optimistic sampling to the boosted Dirichlet posterior.
    """

    rho: float
    psi: int
    omega: float
    kappa: float
    small_n: int
    horizon: int
    preset: str = "custom"
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (0 < self.rho <= 1):
            raise UsageError(f"rho must lie in (0, 1], got {self.rho}")
        if self.psi < 1:
            raise UsageError(f"psi must be >= 1, got {self.psi}")
        if not self.omega > 0:
            raise UsageError(f"omega must be > 0, got {self.omega}")
        if self.kappa < 1:
            raise UsageError(f"kappa must be >= 1, got {self.kappa}")
        if self.small_n < 0:
            raise UsageError(f"small_n must be >= 0, got {self.small_n}")
        if self.horizon < 1:
            raise UsageError(f"horizon must be >= 1, got {self.horizon}")

    @classmethod
    def theory(cls, num_states: int, num_actions: int, horizon: int, rho: float = 0.05):
        S, A, T = num_states, num_actions, horizon
        omega = math.ceil(613 * math.log(2 * T * S * A / rho))
        psi = max(1, math.ceil(4 * S * math.log(S * A / rho)))
        small_n = max(math.ceil(math.sqrt(T * S / A)), math.ceil(12 * omega * S**2))
        return cls(rho=rho, psi=psi, omega=omega, kappa=omega / 6, small_n=small_n,
                   horizon=T, preset="theory")

    @classmethod
    def practical(cls, num_states: int, num_actions: int, horizon: int, rho: float = 0.05):
        S, A, T = num_states, num_actions, horizon
        return cls(rho=rho, psi=S, omega=1.0, kappa=1.0,
                   small_n=math.ceil(math.sqrt(T * S / A)), horizon=T, preset="practical")

    @classmethod
    def from_preset(cls, preset: str, num_states: int, num_actions: int, horizon: int,
                    rho: float = 0.05, **overrides):
        if preset not in ("theory", "practical"):
            raise UsageError(f"unknown preset {preset!r}; expected 'theory' or 'practical'")
        cfg = getattr(cls, preset)(num_states, num_actions, horizon, rho)
        if overrides:
            params = {k: getattr(cfg, k) for k in ("rho", "psi", "omega", "kappa", "small_n", "horizon")}
            params.update(overrides)
            cfg = cls(**params, preset=f"{preset}+custom")
        return cfg


def boosted_params(counts: TransitionCounts, s: int, a: int, cfg: PsrlConfig) -> np.ndarray:
    """Dirichlet parameters ``(N(s, a, i) + omega) / kappa``."""
    return (counts.by_next[s, a] + cfg.omega) / cfg.kappa


def _log_gamma_variates(shape: np.ndarray, rng: np.random.Generator, size=None) -> np.ndarray:
    """Logs of unit-scale gamma variates with the given (broadcast) shapes.

    Shapes >= 1 use numpy's rejection sampler directly; shapes < 1 use the
    boost ``G(a) = G(a + 1) * U**(1/a)``, kept in log space so tiny shapes
    cannot underflow to zero.
    """
    shape = np.asarray(shape, dtype=np.float64)
    out_shape = shape.shape if size is None else tuple(np.atleast_1d(size)) + shape.shape
    shape = np.broadcast_to(shape, out_shape)
    small = shape < 1.0
    boosted = np.where(small, shape + 1.0, shape)
    logs = np.log(rng.standard_gamma(boosted))
    if np.any(small):
        u = rng.random(out_shape)
        logs = np.where(small, logs + np.log(u) / np.where(small, shape, 1.0), logs)
    return logs


def _check_positive(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim == 0 or alpha.shape[-1] < 1:
        raise UsageError("Dirichlet parameters must be a non-empty vector")
    if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
        raise UsageError("Dirichlet parameters must be finite and strictly positive")
    return alpha


def sample_dirichlet(alpha, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw from Dirichlet(alpha) by normalizing independent gamma variates.

    ``alpha`` may carry leading batch axes; ``size`` prepends more.
    """
    alpha = _check_positive(alpha)
    logs = _log_gamma_variates(alpha, rng, size)
    return np.exp(logs - logsumexp(logs, axis=-1, keepdims=True))


def sample_beta(a: float, b: float, rng: np.random.Generator, size=None):
    """Beta(a, b) as the first coordinate of a Dirichlet(a, b) draw."""
    if not (a > 0 and b > 0):
        raise UsageError("Beta parameters must be strictly positive")
    draws = sample_dirichlet(np.array([a, b], dtype=np.float64), rng, size)
    x = draws[..., 0]
    return float(x) if size is None else x


def simple_optimistic_deltas(counts_row) -> tuple[np.ndarray, np.ndarray]:
    """Empirical distribution and shrinkage widths for simple optimistic sampling.

    ``counts_row`` may be batched on leading axes. With ``n = 0`` the
    empirical vector is taken as all zeros.
    """
    counts_row = np.asarray(counts_row, dtype=np.float64)
    S = counts_row.shape[-1]
    n = counts_row.sum(axis=-1, keepdims=True)
    safe_n = np.where(n > 0, n, 1.0)
    p_hat = np.where(n > 0, counts_row / safe_n, 0.0)
    log_term = math.log(4 * S)
    delta = np.sqrt(3.0 * p_hat * log_term / safe_n) + 3.0 * log_term / safe_n
    return p_hat, delta


def simple_optimistic_from_counts(counts_row, rng: np.random.Generator, size=None) -> np.ndarray:
    """Shrink the empirical distribution and put the freed mass on a uniform random corner."""
    p_hat, delta = simple_optimistic_deltas(counts_row)
    lower = np.maximum(p_hat - delta, 0.0)
    S = lower.shape[-1]
    out_shape = lower.shape if size is None else tuple(np.atleast_1d(size)) + lower.shape
    q = np.array(np.broadcast_to(lower, out_shape), copy=True)
    corner = rng.integers(0, S, size=out_shape[:-1])
    leftover = 1.0 - q.sum(axis=-1)
    np.put_along_axis(q, corner[..., None],
                      np.take_along_axis(q, corner[..., None], axis=-1) + leftover[..., None],
                      axis=-1)
    return q


def simple_optimistic_sample(counts: TransitionCounts, s: int, a: int,
                             rng: np.random.Generator) -> np.ndarray:
    return simple_optimistic_from_counts(counts.by_next[s, a], rng)


def box_max_deviation(q, p, height: float) -> np.ndarray | float:
    """``max over h in [0, height]^S of (q - p).h``, which is ``height`` times the positive part of ``q - p``."""
    diff = np.asarray(q, dtype=np.float64) - np.asarray(p, dtype=np.float64)
    out = height * np.maximum(diff, 0.0).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


class DegenerateSupportError(ValueError):
    pass


@dataclass(frozen=True)
class StickBreaking:
    """Stick-breaking view of ``p`` under the index order given.

    ``gamma``, ``c`` and ``H`` have S - 1 entries (the last index has an
    empty suffix); ``y`` and ``tail`` have S.
    """

    gamma: np.ndarray
    c: np.ndarray
    H: np.ndarray
    y: np.ndarray
    tail: np.ndarray


def stick_breaking_quantities(p, h) -> StickBreaking:
    p = np.asarray(p, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    tail = np.cumsum(p[::-1])[::-1]
    if np.any(tail[1:] <= 0) or tail[0] <= 0:
        raise DegenerateSupportError("probability vector has a vanishing suffix sum")
    y = p / tail
    suffix = tail[1:]
    weighted = np.cumsum((h * p)[::-1])[::-1][1:]
    H = weighted / suffix
    c = h[:-1] - H
    gamma = p[:-1] * suffix / tail[:-1]
    return StickBreaking(gamma, c, H, y, tail)


def stick_breaking_coordinates(p) -> np.ndarray:
    """``y_i = p_i / (p_i + ... + p_S)`` along the last axis."""
    p = np.asarray(p, dtype=np.float64)
    tail = np.cumsum(p[..., ::-1], axis=-1)[..., ::-1]
    return p / tail

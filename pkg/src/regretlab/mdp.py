"""Tabular MDP model, validation, stepping and plain-text serialization."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SIMPLEX_ATOL = 1e-12


class UsageError(ValueError):
    """Raised when an operation is called with out-of-range arguments."""


class InvalidMdpError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid MDP: " + "; ".join(self.violations[:5]))


def _frozen(x, dtype=float):
    arr = np.array(x, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Mdp:
    """A finite MDP with known deterministic rewards.

    ``transitions[s, a]`` is the next-state distribution of taking ``a`` in
    ``s`` and ``rewards[s, a]`` the reward collected. Arrays are stored
    read-only so instances can be shared freely.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    start_state: int = 0
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "transitions", _frozen(self.transitions))
        object.__setattr__(self, "rewards", _frozen(self.rewards))
        object.__setattr__(self, "start_state", int(self.start_state))
        if self.transitions.ndim != 3 or self.transitions.shape[0] != self.transitions.shape[2]:
            raise InvalidMdpError([f"transitions must have shape (S, A, S), got {self.transitions.shape}"])
        if self.rewards.shape != self.transitions.shape[:2]:
            raise InvalidMdpError([f"rewards must have shape {self.transitions.shape[:2]}, got {self.rewards.shape}"])

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    def validated(self) -> "Mdp":
        violations = validate_mdp(self)
        if violations:
            raise InvalidMdpError(violations)
        return self

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.start_state == other.start_state
            and np.array_equal(self.transitions, other.transitions)
            and np.array_equal(self.rewards, other.rewards)
        )

    __hash__ = None


def validate_mdp(m: Mdp) -> list[str]:
    """Return every simplex/range violation of ``m``; an empty list means valid."""
    violations = []
    S, A = m.num_states, m.num_actions
    if S < 1 or A < 1:
        violations.append(f"need S >= 1 and A >= 1, got S={S} A={A}")
    for s in range(S):
        for a in range(A):
            row = m.transitions[s, a]
            if not np.all(np.isfinite(row)):
                violations.append(f"({s},{a}): non-finite transition entry")
                continue
            if np.any(row < 0):
                violations.append(f"({s},{a}): negative transition entry {row.min()!r}")
            total = row.sum()
            if abs(total - 1.0) > SIMPLEX_ATOL:
                violations.append(f"({s},{a}): transition row sums to {total!r}")
            r = m.rewards[s, a]
            if not (0.0 <= r <= 1.0):
                violations.append(f"({s},{a}): reward {r!r} outside [0, 1]")
    if not (0 <= m.start_state < S):
        violations.append(f"start state {m.start_state} outside [0, {S})")
    return violations


def _check_state_action(m: Mdp, s: int, a: int) -> None:
    if not (0 <= s < m.num_states):
        raise UsageError(f"state {s} outside [0, {m.num_states})")
    if not (0 <= a < m.num_actions):
        raise UsageError(f"action {a} outside [0, {m.num_actions})")


def transition_cdf(probs: np.ndarray) -> np.ndarray:
    """Cumulative sums along the last axis, saturated to +inf at the last
    positive entry so rounding in the sum can never select a zero-mass index."""
    probs = np.asarray(probs, dtype=np.float64)
    cdf = np.cumsum(probs, axis=-1)
    S = probs.shape[-1]
    positive = probs > 0
    # index of the last positive entry in each row
    last = S - 1 - np.argmax(positive[..., ::-1], axis=-1)
    cols = np.arange(S)
    cdf[cols >= last[..., None]] = np.inf
    return np.ascontiguousarray(cdf)


def inverse_cdf(probs: np.ndarray, u: float) -> int:
    """Index of the first cumulative-sum entry exceeding ``u``."""
    cdf = transition_cdf(probs)
    return int(np.searchsorted(cdf, u, side="right"))


def step(m: Mdp, s: int, a: int, rng: np.random.Generator) -> tuple[int, float]:
    """Sample one transition from ``(s, a)``; consumes exactly one uniform."""
    _check_state_action(m, s, a)
    u = rng.random()
    return inverse_cdf(m.transitions[s, a], u), float(m.rewards[s, a])


def check_policy(m: Mdp, policy) -> np.ndarray:
    policy = np.asarray(policy)
    if policy.shape != (m.num_states,):
        raise UsageError(f"policy must have shape ({m.num_states},), got {policy.shape}")
    if not np.issubdtype(policy.dtype, np.integer):
        raise UsageError("policy entries must be integer action indices")
    if np.any(policy < 0) or np.any(policy >= m.num_actions):
        raise UsageError(f"policy entries must lie in [0, {m.num_actions})")
    return policy.astype(np.intp)


def policy_transition_matrix(m: Mdp, policy) -> np.ndarray:
    """Row-stochastic S x S matrix whose row ``s`` is ``P[s, policy[s]]``."""
    policy = check_policy(m, policy)
    return m.transitions[np.arange(m.num_states), policy].copy()


def policy_rewards(m: Mdp, policy) -> np.ndarray:
    policy = check_policy(m, policy)
    return m.rewards[np.arange(m.num_states), policy].copy()


# plain-text format: "S A start" header, then one "s a r p_0 ... p_{S-1}" line per pair


def dumps(m: Mdp) -> str:
    buf = io.StringIO()
    S, A = m.num_states, m.num_actions
    buf.write(f"{S} {A} {m.start_state}\n")
    for s in range(S):
        for a in range(A):
            probs = " ".join(repr(float(p)) for p in m.transitions[s, a])
            buf.write(f"{s} {a} {float(m.rewards[s, a])!r} {probs}\n")
    return buf.getvalue()


def loads(text: str) -> Mdp:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise InvalidMdpError(["empty MDP file"])
    try:
        S, A, start = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise InvalidMdpError([f"bad header {lines[0]!r}: expected 'S A start'"]) from exc
    if S < 1 or A < 1:
        raise InvalidMdpError([f"bad header: S={S} A={A}"])
    P = np.full((S, A, S), np.nan)
    r = np.full((S, A), np.nan)
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split()
        if len(fields) != 3 + S:
            raise InvalidMdpError([f"line {lineno}: expected {3 + S} fields, got {len(fields)}"])
        s, a = int(fields[0]), int(fields[1])
        if not (0 <= s < S and 0 <= a < A):
            raise InvalidMdpError([f"line {lineno}: pair ({s},{a}) out of range"])
        if (s, a) in seen:
            raise InvalidMdpError([f"line {lineno}: duplicate pair ({s},{a})"])
        seen.add((s, a))
        r[s, a] = float(fields[2])
        P[s, a] = [float(x) for x in fields[3:]]
    if len(seen) != S * A:
        missing = sorted({(s, a) for s in range(S) for a in range(A)} - seen)
        raise InvalidMdpError([f"missing pairs: {missing[:5]}"])
    return Mdp(P, r, start)


def save(m: Mdp, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(m))


def load(path: str | os.PathLike) -> Mdp:
    with open(path) as fh:
        return loads(fh.read())

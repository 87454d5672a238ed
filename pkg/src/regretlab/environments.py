"""Communicating MDP generators."""

from __future__ import annotations

import numpy as np

from .mdp import Mdp, UsageError

LEFT, RIGHT = 0, 1


def make_riverswim(n_states: int, *, p_right: float = 0.35, p_stay: float = 0.6,
                   end_stay: float = 0.6, left_reward: float = 0.005,
                   right_reward: float = 1.0) -> Mdp:
    """RiverSwim chain: LEFT drifts home for a tiny reward, RIGHT fights the current.

    Interior RIGHT moves right with ``p_right``, stays with ``p_stay`` and
    slips left otherwise. At either end RIGHT stays with ``end_stay`` and
    moves inward with the remaining mass.
    """
    if n_states < 2:
        raise UsageError("RiverSwim needs at least 2 states")
    p_left = 1.0 - p_right - p_stay
    if min(p_right, p_stay, p_left) < 0 or not (0 < end_stay < 1):
        raise UsageError("RiverSwim probabilities must form a distribution")
    n = n_states
    P = np.zeros((n, 2, n))
    r = np.zeros((n, 2))
    for s in range(n):
        P[s, LEFT, max(s - 1, 0)] = 1.0
        if s == 0:
            P[s, RIGHT, 0] = end_stay
            P[s, RIGHT, 1] = 1.0 - end_stay
        elif s == n - 1:
            P[s, RIGHT, s] = end_stay
            P[s, RIGHT, s - 1] = 1.0 - end_stay
        else:
            P[s, RIGHT, s + 1] = p_right
            P[s, RIGHT, s] = p_stay
            P[s, RIGHT, s - 1] = p_left
    r[0, LEFT] = left_reward
    r[n - 1, RIGHT] = right_reward
    return Mdp(P, r, 0, metadata={"name": "riverswim", "n_states": n}).validated()


def make_random_communicating(S: int, A: int, seed: int, mixing: float = 0.1) -> Mdp:
    """Dirichlet(1, ..., 1) rows blended with the uniform distribution.

    Every entry is at least ``mixing / S``, so every state reaches every other
    in one step with positive probability.
    """
    from .solvers import diameter

    if S < 1 or A < 1:
        raise UsageError("need S >= 1 and A >= 1")
    if not (0 < mixing <= 1):
        raise UsageError("mixing must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(S), size=(S, A))
    P = (1.0 - mixing) * P + mixing / S
    P /= P.sum(axis=-1, keepdims=True)
    r = rng.random((S, A))
    m = Mdp(P, r, 0, metadata={"name": "random", "S": S, "A": A, "seed": seed,
                               "mixing": mixing}).validated()
    m.metadata["diameter"] = diameter(m)
    return m


def make_two_state_chain(p: float, q: float, rewards=(0.0, 1.0)) -> Mdp:
    """Single-action chain flipping 0 -> 1 with probability ``p`` and 1 -> 0 with ``q``."""
    if not (0 < p <= 1 and 0 < q <= 1):
        raise UsageError("flip probabilities must lie in (0, 1]")
    P = np.array([[[1.0 - p, p]], [[q, 1.0 - q]]])
    r = np.asarray(rewards, dtype=float).reshape(2, 1)
    return Mdp(P, r, 0, metadata={"name": "two_state", "p": p, "q": q}).validated()


GENERATORS = {
    "riverswim": make_riverswim,
    "random": make_random_communicating,
    "two_state": make_two_state_chain,
}


def parse_env_spec(spec: str) -> tuple[str, dict]:
    """Split ``"name:key=value,key=value"`` into a generator name and kwargs."""
    name, _, rest = spec.strip().partition(":")
    name = name.strip()
    kwargs = {}
    for item in filter(None, (x.strip() for x in rest.replace(" ", ",").split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise UsageError(f"bad environment parameter {item!r}; expected key=value")
        kwargs[key.strip()] = _parse_number(value.strip())
    return name, kwargs


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def make_env(spec: str) -> Mdp:
    name, kwargs = parse_env_spec(spec)
    if name not in GENERATORS:
        raise UsageError(f"unknown environment {name!r}; known: {sorted(GENERATORS)}")
    if name == "two_state" and "r0" in kwargs:
        kwargs["rewards"] = (kwargs.pop("r0"), kwargs.pop("r1", 1.0))
    try:
        return GENERATORS[name](**kwargs)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {name!r}: {exc}") from exc

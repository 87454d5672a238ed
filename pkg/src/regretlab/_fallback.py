"""Pure numpy/Python implementations of the hot kernels.

Signatures and return conventions match ``_ckernels.pyx`` exactly; see
``regretlab.kernels`` for the selection logic.
"""

import numpy as np

# status codes shared with the compiled kernels
CONVERGED = 0
ITERATION_CAP = 1
DIVERGED = 2


def relative_value_iteration(r, P, h0, eps, max_iter, alpha):
    """Damped relative value iteration over an (S, K) action table.

    Returns ``(h, increments, policy, iterations, status)`` where ``h`` is the
    iterate whose one-step increment vector ``increments`` has span <= eps.
    """
    S = r.shape[0]
    h = np.array(h0, dtype=np.float64, copy=True)
    Pa = alpha * P
    for it in range(1, max_iter + 1):
        q = r + Pa @ h
        policy = np.argmax(q, axis=1)
        v = q[np.arange(S), policy] + (1.0 - alpha) * h
        diff = v - h
        if diff.max() - diff.min() <= eps:
            return h, diff, policy.astype(np.int64), it, CONVERGED
        h = v - v[0]
    return h, diff, policy.astype(np.int64), max_iter, ITERATION_CAP


def _l1_optimistic_rows(phat, d, h):
    """Maximize q.h over the L1 ball of radius d around each row of phat."""
    S = h.shape[0]
    order = np.argsort(-h, kind="stable")
    q = phat[..., order].copy()
    q[..., 0] = np.minimum(1.0, q[..., 0] + d / 2.0)
    excess = q.sum(axis=-1) - 1.0
    # remove excess mass starting at the lowest-h state
    for idx in range(S - 1, 0, -1):
        take = np.minimum(np.maximum(excess, 0.0), q[..., idx])
        q[..., idx] -= take
        excess -= take
    out = np.empty_like(q)
    out[..., order] = q
    return out


def extended_value_iteration(r, phat, d, h0, eps, max_iter, alpha):
    S, A = r.shape
    h = np.array(h0, dtype=np.float64, copy=True)
    for it in range(1, max_iter + 1):
        Q = _l1_optimistic_rows(phat, d, h)
        q = r + alpha * (Q @ h)
        policy = np.argmax(q, axis=1)
        v = q[np.arange(S), policy] + (1.0 - alpha) * h
        diff = v - h
        if diff.max() - diff.min() <= eps:
            return h, diff, policy.astype(np.int64), it, CONVERGED
        h = v - v[0]
    return h, diff, policy.astype(np.int64), max_iter, ITERATION_CAP


def min_hitting_times(P, target, tol, max_iter, blowup):
    """Value iteration ``E <- 1 + min_a P E`` with ``E[target]`` pinned to 0."""
    S = P.shape[0]
    E = np.zeros(S)
    for it in range(1, max_iter + 1):
        new = 1.0 + (P @ E).min(axis=1)
        new[target] = 0.0
        change = np.abs(new - E).max()
        E = new
        if change <= tol:
            return E, it, CONVERGED
        if E.max() > blowup:
            return E, it, DIVERGED
    return E, max_iter, ITERATION_CAP


def rollout_epoch(cdf, policy, rewards, total, by_next, start_total,
                  uniforms, t0, state, rewards_out, actions_out):
    """Play ``policy`` from round ``t0`` until a visit count doubles.

    Mutates the count arrays and the output buffers in place and returns
    ``(next_round, next_state)``; ``next_round == len(uniforms)`` at the horizon.
    """
    T = uniforms.shape[0]
    S = cdf.shape[2]
    last = S - 1
    t = t0
    s = state
    while t < T:
        a = int(policy[s])
        row = cdf[s, a]
        u = uniforms[t]
        nxt = 0
        while nxt < last and not (u < row[nxt]):
            nxt += 1
        rewards_out[t] = rewards[s, a]
        actions_out[t] = a
        total[s, a] += 1
        by_next[s, a, nxt] += 1
        t += 1
        broke = total[s, a] >= 2 * start_total[s, a]
        s = nxt
        if broke:
            break
    return t, s

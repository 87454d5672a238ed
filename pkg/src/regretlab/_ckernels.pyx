# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_fallback``.

Every function mirrors its fallback counterpart argument for argument.
"""

import numpy as np
cimport numpy as cnp

from libc.math cimport fabs

cnp.import_array()

cdef enum:
    CONVERGED = 0
    ITERATION_CAP = 1
    DIVERGED = 2


def relative_value_iteration(const double[:, ::1] r, const double[:, :, ::1] P,
                             h0, double eps, long max_iter, double alpha):
    cdef Py_ssize_t S = r.shape[0], K = r.shape[1]
    cdef Py_ssize_t s, k, j, best
    cdef long it
    cdef double q, qbest, lo, hi, ref
    h_arr = np.array(h0, dtype=np.float64, copy=True)
    v_arr = np.empty(S, dtype=np.float64)
    diff_arr = np.empty(S, dtype=np.float64)
    pol_arr = np.zeros(S, dtype=np.int64)
    cdef double[::1] h = h_arr
    cdef double[::1] v = v_arr
    cdef double[::1] diff = diff_arr
    cdef long long[::1] pol = pol_arr
    cdef int status = ITERATION_CAP
    it = 0
    while it < max_iter:
        it += 1
        for s in range(S):
            best = 0
            qbest = 0.0
            for k in range(K):
                q = 0.0
                for j in range(S):
                    q += P[s, k, j] * h[j]
                q = r[s, k] + alpha * q
                if k == 0 or q > qbest:
                    qbest = q
                    best = k
            pol[s] = best
            v[s] = qbest + (1.0 - alpha) * h[s]
            diff[s] = v[s] - h[s]
        lo = diff[0]
        hi = diff[0]
        for s in range(1, S):
            if diff[s] < lo:
                lo = diff[s]
            if diff[s] > hi:
                hi = diff[s]
        if hi - lo <= eps:
            status = CONVERGED
            break
        ref = v[0]
        for s in range(S):
            h[s] = v[s] - ref
    return h_arr, diff_arr, pol_arr, it, status


def extended_value_iteration(const double[:, ::1] r, const double[:, :, ::1] phat,
                             const double[:, ::1] d, h0, double eps, long max_iter,
                             double alpha):
    cdef Py_ssize_t S = r.shape[0], A = r.shape[1]
    cdef Py_ssize_t s, a, j, idx, best
    cdef long it
    cdef double q, qbest, lo, hi, ref, excess, take, top
    h_arr = np.array(h0, dtype=np.float64, copy=True)
    v_arr = np.empty(S, dtype=np.float64)
    diff_arr = np.empty(S, dtype=np.float64)
    pol_arr = np.zeros(S, dtype=np.int64)
    row_arr = np.empty(S, dtype=np.float64)
    cdef double[::1] h = h_arr
    cdef double[::1] v = v_arr
    cdef double[::1] diff = diff_arr
    cdef double[::1] row = row_arr
    cdef long long[::1] pol = pol_arr
    cdef long long[::1] order
    cdef int status = ITERATION_CAP
    it = 0
    while it < max_iter:
        it += 1
        order = np.argsort(-h_arr, kind="stable").astype(np.int64)
        for s in range(S):
            best = 0
            qbest = 0.0
            for a in range(A):
                # sorted copy of the empirical row, then the L1-ball inner maximization
                excess = -1.0
                for idx in range(S):
                    row[idx] = phat[s, a, order[idx]]
                    excess += row[idx]
                top = row[0] + d[s, a] / 2.0
                if top > 1.0:
                    top = 1.0
                excess += top - row[0]
                row[0] = top
                idx = S - 1
                while idx > 0:
                    take = excess if excess > 0.0 else 0.0
                    if take > row[idx]:
                        take = row[idx]
                    row[idx] -= take
                    excess -= take
                    idx -= 1
                q = 0.0
                for idx in range(S):
                    q += row[idx] * h[order[idx]]
                q = r[s, a] + alpha * q
                if a == 0 or q > qbest:
                    qbest = q
                    best = a
            pol[s] = best
            v[s] = qbest + (1.0 - alpha) * h[s]
            diff[s] = v[s] - h[s]
        lo = diff[0]
        hi = diff[0]
        for s in range(1, S):
            if diff[s] < lo:
                lo = diff[s]
            if diff[s] > hi:
                hi = diff[s]
        if hi - lo <= eps:
            status = CONVERGED
            break
        ref = v[0]
        for s in range(S):
            h[s] = v[s] - ref
    return h_arr, diff_arr, pol_arr, it, status


def min_hitting_times(const double[:, :, ::1] P, Py_ssize_t target, double tol,
                      long max_iter, double blowup):
    cdef Py_ssize_t S = P.shape[0], A = P.shape[1]
    cdef Py_ssize_t s, a, j
    cdef long it = 0
    cdef double q, qmin, change, top
    E_arr = np.zeros(S, dtype=np.float64)
    new_arr = np.zeros(S, dtype=np.float64)
    cdef double[::1] E = E_arr
    cdef double[::1] new = new_arr
    cdef int status = ITERATION_CAP
    while it < max_iter:
        it += 1
        for s in range(S):
            qmin = 0.0
            for a in range(A):
                q = 0.0
                for j in range(S):
                    q += P[s, a, j] * E[j]
                if a == 0 or q < qmin:
                    qmin = q
            new[s] = 1.0 + qmin
        new[target] = 0.0
        change = 0.0
        top = 0.0
        for s in range(S):
            if fabs(new[s] - E[s]) > change:
                change = fabs(new[s] - E[s])
            E[s] = new[s]
            if E[s] > top:
                top = E[s]
        if change <= tol:
            status = CONVERGED
            break
        if top > blowup:
            status = DIVERGED
            break
    return E_arr, it, status


def rollout_epoch(const double[:, :, ::1] cdf, const long long[::1] policy,
                  const double[:, ::1] rewards, long long[:, ::1] total,
                  long long[:, :, ::1] by_next, const long long[:, ::1] start_total,
                  const double[::1] uniforms, Py_ssize_t t0, Py_ssize_t state,
                  double[::1] rewards_out, long long[::1] actions_out):
    cdef Py_ssize_t T = uniforms.shape[0]
    cdef Py_ssize_t last = cdf.shape[2] - 1
    cdef Py_ssize_t t = t0, s = state, a, nxt
    cdef double u
    cdef bint broke
    while t < T:
        a = policy[s]
        u = uniforms[t]
        nxt = 0
        while nxt < last and not (u < cdf[s, a, nxt]):
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

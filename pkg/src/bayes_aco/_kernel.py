"""Compiled ant walks.

Each step mirrors ``bayes.step_distribution`` operation for operation
(same candidate order, same normalisations) so that the Python reference
walk and this kernel pick identical cells for identical uniforms.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _step_weights(cur, nbr, visited, stamp, tau, eta, alpha, beta, lik, f4,
                  use_lik, use_risk, risk, w):
    """Fill ``w[d]`` with the step distribution out of ``cur``; return the
    number of candidates."""
    n_cand = 0
    sum_a = 0.0
    for d in range(8):
        nb = nbr[cur, d]
        if nb >= 0 and visited[nb] != stamp:
            n_cand += 1
            w[d] = tau[cur, d] ** alpha * eta[cur, d] ** beta
            sum_a += w[d]
    if n_cand == 0:
        return 0
    for d in range(8):
        nb = nbr[cur, d]
        if nb >= 0 and visited[nb] != stamp:
            w[d] = w[d] / sum_a if sum_a > 0.0 else 1.0 / n_cand
        else:
            w[d] = -1.0
    if not use_lik:
        return n_cand
    sp = 0.0
    for d in range(8):
        if w[d] >= 0.0:
            sp += w[d] * lik[cur, d]
    if sp > 0.0:
        for d in range(8):
            if w[d] >= 0.0:
                w[d] = w[d] * lik[cur, d] / sp
    if not use_risk:
        return n_cand
    p_unexp = 0.0
    for d in range(8):
        if w[d] >= 0.0:
            p_unexp += w[d] * f4[cur, d]
    p_exp = 1.0 - p_unexp
    r_explore = risk[0, 0] * p_unexp + risk[0, 1] * p_exp
    r_exploit = risk[1, 0] * p_unexp + risk[1, 1] * p_exp
    if r_explore <= r_exploit:
        sf = 0.0
        for d in range(8):
            if w[d] >= 0.0:
                sf += w[d] * f4[cur, d]
        if sf > 0.0:
            for d in range(8):
                if w[d] >= 0.0:
                    w[d] = w[d] * f4[cur, d] / sf
    return n_cand


@njit(cache=True)
def _choose(w, u, greedy):
    best = -1
    if greedy:
        for d in range(8):
            if w[d] >= 0.0 and (best < 0 or w[d] > w[best]):
                best = d
        return best
    total = 0.0
    for d in range(8):
        if w[d] >= 0.0:
            total += w[d]
    x = u * total
    acc = 0.0
    for d in range(8):
        if w[d] >= 0.0:
            acc += w[d]
            best = d
            if x < acc:
                return d
    return best


@njit(cache=True)
def walk_colony(nbr, cost, tau, eta, alpha, beta, lik, f4, use_lik, use_risk, risk,
                start, goal, uniforms, max_steps, greedy):
    """Run one ant per row of ``uniforms``.

    Returns ``(paths, n_cells, lengths, lik_sums, ok)``; ``paths[a, :n_cells[a]]``
    holds the flat cell indices visited by ant ``a``.
    """
    n_ants, n_u = uniforms.shape
    ncells = nbr.shape[0]
    cap = min(max_steps, ncells - 1) + 1
    paths = np.full((n_ants, cap), -1, dtype=np.int64)
    n_cells = np.zeros(n_ants, dtype=np.int64)
    lengths = np.zeros(n_ants)
    lik_sums = np.zeros(n_ants)
    ok = np.zeros(n_ants, dtype=np.bool_)
    visited = np.zeros(ncells, dtype=np.int64)
    w = np.empty(8)
    for a in range(n_ants):
        stamp = a + 1
        cur = start
        visited[cur] = stamp
        paths[a, 0] = cur
        k = 1
        length = 0.0
        ls = 0.0
        while cur != goal:
            if k - 1 >= max_steps:
                break
            nc = _step_weights(cur, nbr, visited, stamp, tau, eta, alpha, beta,
                               lik, f4, use_lik, use_risk, risk, w)
            if nc == 0:
                break
            u = uniforms[a, k - 1] if k - 1 < n_u else 0.0
            d = _choose(w, u, greedy)
            length += cost[cur, d]
            ls += lik[cur, d]
            cur = nbr[cur, d]
            visited[cur] = stamp
            paths[a, k] = cur
            k += 1
        n_cells[a] = k
        lengths[a] = length
        lik_sums[a] = ls
        ok[a] = cur == goal
    return paths, n_cells, lengths, lik_sums, ok

"""Compiled inner loops for graph growth.

Node indices inside the kernels are 0-based; the excess list stores each
node ``v`` exactly ``degree[v] - 1`` times.  Every step consumes exactly one
uniform from the caller-supplied buffer.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True, inline="always")
def select_target(excess, n, u, delta):
    """Map a uniform in [0, 1) to a target node (0-based) or -1 for a self-loop.

    Total mass n(2+delta) + (1+delta) is split into three regions:
    n(1+delta) uniform over nodes, n over the excess list, 1+delta self-loop.
    """
    one_d = 1.0 + delta
    x = u * (n * (2.0 + delta) + one_d)
    r1 = n * one_d
    if x < r1:
        v = int(x / one_d)
        if v >= n:
            v = n - 1
        return v
    x -= r1
    if x < n:
        idx = int(x)
        if idx >= n:
            idx = n - 1
        return excess[idx]
    return -1


@nb.njit(cache=True)
def grow(degrees, excess, n, uniforms, delta):
    """Advance from stage ``n`` by ``len(uniforms)`` steps; returns the new stage."""
    for u in uniforms:
        v = select_target(excess, n, u, delta)
        if v >= 0:
            degrees[v] += 1
            degrees[n] = 1
            excess[n] = v
        else:
            degrees[n] = 2
            excess[n] = n
        n += 1
    return n


@nb.njit(cache=True)
def grow_tracked(degrees, excess, n, uniforms, delta, counts, out):
    """Like :func:`grow` but records N_m(1..k_max) after every step.

    ``counts`` holds the current census for degrees 1..k_max (index k-1) and
    is updated in place; row ``s`` of ``out`` receives the census after step s.
    """
    k_max = counts.shape[0]
    for s in range(uniforms.shape[0]):
        v = select_target(excess, n, uniforms[s], delta)
        if v >= 0:
            old = degrees[v]
            degrees[v] = old + 1
            if old <= k_max:
                counts[old - 1] -= 1
            if old + 1 <= k_max:
                counts[old] += 1
            degrees[n] = 1
            excess[n] = v
            counts[0] += 1
        else:
            degrees[n] = 2
            excess[n] = n
            if k_max >= 2:
                counts[1] += 1
        n += 1
        out[s, :] = counts
    return n


@nb.njit(cache=True)
def batch_census(uniforms, delta, k_max):
    """Grow one graph per row of ``uniforms`` from the initial state and
    return the census N(1..k_max) at the final stage for each row."""
    rows, steps = uniforms.shape
    n_final = steps + 1
    degrees = np.empty(n_final, dtype=np.int64)
    excess = np.empty(n_final, dtype=np.int64)
    out = np.zeros((rows, k_max), dtype=np.int64)
    for r in range(rows):
        degrees[0] = 2
        excess[0] = 0
        grow(degrees, excess, 1, uniforms[r], delta)
        for v in range(n_final):
            d = degrees[v]
            if d <= k_max:
                out[r, d - 1] += 1
    return out


@nb.njit(cache=True)
def mean_stream(n_final, k_max, delta, p):
    """Run the mean recursion to stage ``n_final`` without storing the table.

    Returns nu_{n_final}(1..k_max) and max over m <= n_final of
    |nu_m(k) - m p_k| per k.  ``k_max`` must be >= 2.
    """
    nu = np.zeros(k_max)
    nu[1] = 1.0
    dev = np.abs(nu - p)
    nxt = np.empty(k_max)
    for n in range(1, n_final):
        denom = n * (2.0 + delta) + 1.0 + delta
        for k in range(k_max):
            nxt[k] = (1.0 - (k + 1.0 + delta) / denom) * nu[k]
            if k > 0:
                nxt[k] += (k + delta) / denom * nu[k - 1]
        nxt[0] += 1.0 - (1.0 + delta) / denom
        nxt[1] += (1.0 + delta) / denom
        for k in range(k_max):
            nu[k] = nxt[k]
            d = abs(nu[k] - (n + 1) * p[k])
            if d > dev[k]:
                dev[k] = d
    return nu, dev

"""Numba kernels for the MCMC hot loops.

Randomness is never drawn inside a kernel: callers pass pre-drawn arrays
from a ``numpy.random.Generator`` so every chain is reproducible from its
seed and independent of numba's global RNG state.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def alaam_toggles(indptr, indices, y, free, binary, continuous, theta, picks, unif, z,
                  out, spacing):
    """Run ``len(picks)`` single-node toggle Metropolis steps.

    ``z`` is the running statistics tally and is updated in place. When
    ``spacing > 0`` the state after every ``spacing``-th step is written to
    consecutive rows of ``out``. Returns the number of accepted toggles.
    """
    accepted = 0
    row = 0
    for t in range(picks.shape[0]):
        i = free[picks[t]]
        lo = indptr[i]
        hi = indptr[i + 1]
        s = 0.0
        for k in range(lo, hi):
            s += y[indices[k]]
        d = hi - lo
        w = (theta[0] + theta[1] * d + theta[2] * s
             + theta[3] * binary[i] + theta[4] * continuous[i])
        sign = 1.0 if y[i] == 0 else -1.0
        if np.log(unif[t]) < sign * w:
            y[i] = 1 - y[i]
            z[0] += sign
            z[1] += sign * d
            z[2] += sign * s
            z[3] += sign * binary[i]
            z[4] += sign * continuous[i]
            accepted += 1
        if spacing > 0 and (t + 1) % spacing == 0:
            out[row, :] = y
            row += 1
    return accepted


@njit(cache=True)
def alaam_sample_stats(indptr, indices, y, free, binary, continuous, theta, picks, unif, z,
                       spacing, stats_out):
    """Like :func:`alaam_toggles` but records the statistics tally, not the state."""
    row = 0
    for t in range(picks.shape[0]):
        i = free[picks[t]]
        lo = indptr[i]
        hi = indptr[i + 1]
        s = 0.0
        for k in range(lo, hi):
            s += y[indices[k]]
        d = hi - lo
        w = (theta[0] + theta[1] * d + theta[2] * s
             + theta[3] * binary[i] + theta[4] * continuous[i])
        sign = 1.0 if y[i] == 0 else -1.0
        if np.log(unif[t]) < sign * w:
            y[i] = 1 - y[i]
            z[0] += sign
            z[1] += sign * d
            z[2] += sign * s
            z[3] += sign * binary[i]
            z[4] += sign * continuous[i]
        if (t + 1) % spacing == 0:
            stats_out[row, :] = z
            row += 1
    return row


# --- ERGM edge-toggle chain -------------------------------------------------
#
# State: dense adjacency ``adj``, neighbour lists ``nbr[i, :deg[i]]`` with
# positions ``pos[i, j]`` for O(1) removal, and the shared-partner matrix
# ``sp[i, j] = |N(i) & N(j)|``. ``qpow[s] = (1 - 1/lambda) ** s``.


@njit(cache=True)
def _ergm_add(adj, nbr, deg, pos, sp, i, j):
    for t in range(deg[j]):
        k = nbr[j, t]
        sp[i, k] += 1
        sp[k, i] += 1
    for t in range(deg[i]):
        k = nbr[i, t]
        sp[j, k] += 1
        sp[k, j] += 1
    adj[i, j] = 1
    adj[j, i] = 1
    pos[i, j] = deg[i]
    nbr[i, deg[i]] = j
    deg[i] += 1
    pos[j, i] = deg[j]
    nbr[j, deg[j]] = i
    deg[j] += 1


@njit(cache=True)
def _list_remove(nbr, deg, pos, a, b):
    p = pos[a, b]
    last = nbr[a, deg[a] - 1]
    nbr[a, p] = last
    pos[a, last] = p
    deg[a] -= 1


@njit(cache=True)
def _ergm_remove(adj, nbr, deg, pos, sp, i, j):
    adj[i, j] = 0
    adj[j, i] = 0
    _list_remove(nbr, deg, pos, i, j)
    _list_remove(nbr, deg, pos, j, i)
    for t in range(deg[j]):
        k = nbr[j, t]
        sp[i, k] -= 1
        sp[k, i] -= 1
    for t in range(deg[i]):
        k = nbr[i, t]
        sp[j, k] -= 1
        sp[k, j] -= 1


@njit(cache=True)
def ergm_add_change(adj, nbr, deg, sp, qpow, lam, i, j, delta):
    """Change statistics for adding absent edge (i, j); written into ``delta``."""
    delta[0] = 1.0
    delta[1] = lam * (2.0 - qpow[deg[i]] - qpow[deg[j]])
    at = lam * (1.0 - qpow[sp[i, j]])
    a2p = 0.0
    for t in range(deg[i]):
        k = nbr[i, t]
        a2p += qpow[sp[j, k]]
        if adj[j, k]:
            at += qpow[sp[i, k]] + qpow[sp[j, k]]
    for t in range(deg[j]):
        k = nbr[j, t]
        a2p += qpow[sp[i, k]]
    delta[2] = at
    delta[3] = a2p


@njit(cache=True)
def ergm_toggles(adj, nbr, deg, pos, sp, qpow, lam, theta, first, second, unif, z):
    """Single-dyad toggle Metropolis steps on an ERGM state (in place)."""
    delta = np.zeros(4)
    accepted = 0
    for t in range(first.shape[0]):
        i = first[t]
        j = second[t]
        if adj[i, j]:
            _ergm_remove(adj, nbr, deg, pos, sp, i, j)
            ergm_add_change(adj, nbr, deg, sp, qpow, lam, i, j, delta)
            w = 0.0
            for e in range(4):
                w -= theta[e] * delta[e]
            if np.log(unif[t]) < w:
                for e in range(4):
                    z[e] -= delta[e]
                accepted += 1
            else:
                _ergm_add(adj, nbr, deg, pos, sp, i, j)
        else:
            ergm_add_change(adj, nbr, deg, sp, qpow, lam, i, j, delta)
            w = 0.0
            for e in range(4):
                w += theta[e] * delta[e]
            if np.log(unif[t]) < w:
                _ergm_add(adj, nbr, deg, pos, sp, i, j)
                for e in range(4):
                    z[e] += delta[e]
                accepted += 1
    return accepted


@njit(cache=True)
def ergm_load(adj, nbr, deg, pos, sp, edges):
    for t in range(edges.shape[0]):
        _ergm_add(adj, nbr, deg, pos, sp, edges[t, 0], edges[t, 1])

"""Compiled inner loops for the Potts and ERGM samplers.

All randomness is drawn by the caller with a numpy Generator and passed in
as arrays, so these functions are pure and safe to call from worker threads.
"""

import numpy as np
from numba import njit


# ---------------------------------------------------------------------------
# Potts / Swendsen-Wang
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True, nogil=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        if ra < rb:
            parent[rb] = ra
        else:
            parent[ra] = rb


@njit(cache=True, nogil=True)
def potts_stat(lab):
    H, W = lab.shape
    s = 0
    for r in range(H):
        for c in range(W):
            if c + 1 < W and lab[r, c] == lab[r, c + 1]:
                s += 1
            if r + 1 < H and lab[r, c] == lab[r + 1, c]:
                s += 1
    return s


@njit(cache=True, nogil=True)
def sw_run(lab, p_bond, K, U, stats_out, states_out, record_states):
    """Run ``U.shape[0]`` Swendsen-Wang cycles in place.

    Row ``t`` of ``U`` holds the uniforms for cycle ``t``: horizontal bonds,
    vertical bonds, then one label draw per cell (used only by component roots).
    """
    H, W = lab.shape
    n = H * W
    nh = H * (W - 1)
    nv = (H - 1) * W
    parent = np.empty(n, dtype=np.int64)
    newlab = np.empty(n, dtype=np.int64)
    for t in range(U.shape[0]):
        u = U[t]
        for i in range(n):
            parent[i] = i
            newlab[i] = -1
        for r in range(H):
            for c in range(W - 1):
                if lab[r, c] == lab[r, c + 1] and u[r * (W - 1) + c] < p_bond:
                    _union(parent, r * W + c, r * W + c + 1)
        for r in range(H - 1):
            for c in range(W):
                if lab[r, c] == lab[r + 1, c] and u[nh + r * W + c] < p_bond:
                    _union(parent, r * W + c, (r + 1) * W + c)
        for i in range(n):
            root = _find(parent, i)
            if newlab[root] < 0:
                v = int(u[nh + nv + root] * K)
                newlab[root] = v if v < K else K - 1
            lab[i // W, i % W] = newlab[root]
        stats_out[t] = potts_stat(lab)
        if record_states:
            states_out[t] = lab
    return lab


# ---------------------------------------------------------------------------
# ERGM random-scan Gibbs
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def ergm_delta(adj, sp, deg, grade, sex, i, j, a_d, a_s, e_s, out):
    """Statistic change from switching dyad (i, j) on, given the rest of the graph."""
    N = adj.shape[0]
    for q in range(out.shape[0]):
        out[q] = 0.0
    out[0] = 1.0
    if grade[i] == grade[j] and grade[i] >= 7 and grade[i] <= 12:
        out[grade[i] - 6] = 1.0
    if sex[i] == sex[j]:
        out[7] = 1.0
    x_ij = adj[i, j]
    di = deg[i] - x_ij
    dj = deg[j] - x_ij
    out[8] = a_d**di + a_d**dj
    total = e_s * (1.0 - a_s ** sp[i, j])
    for k in range(N):
        if adj[i, k] == 1 and adj[j, k] == 1:
            total += a_s ** (sp[i, k] - x_ij) + a_s ** (sp[j, k] - x_ij)
    out[9] = total


@njit(cache=True, nogil=True)
def ergm_toggle(adj, sp, deg, i, j, value):
    """Set dyad (i, j) to ``value`` keeping degrees and shared partners in sync."""
    N = adj.shape[0]
    if adj[i, j] == value:
        return
    step = 1 if value == 1 else -1
    adj[i, j] = 0
    adj[j, i] = 0
    for k in range(N):
        if adj[j, k] == 1 and k != i:
            sp[i, k] += step
            sp[k, i] += step
        if adj[i, k] == 1 and k != j:
            sp[j, k] += step
            sp[k, j] += step
    adj[i, j] = value
    adj[j, i] = value
    deg[i] += step
    deg[j] += step


@njit(cache=True, nogil=True)
def ergm_gibbs_run(adj, sp, deg, grade, sex, theta, pair_i, pair_j, picks, u,
                   a_d, a_s, e_s, stats, burn, thin, out):
    """Random-scan Gibbs updates; records ``stats`` every ``thin`` updates after ``burn``."""
    p = theta.shape[0]
    delta = np.empty(p)
    rec = 0
    for t in range(picks.shape[0]):
        i = pair_i[picks[t]]
        j = pair_j[picks[t]]
        ergm_delta(adj, sp, deg, grade, sex, i, j, a_d, a_s, e_s, delta)
        eta = 0.0
        for q in range(p):
            eta += theta[q] * delta[q]
        if eta >= 0:
            prob = 1.0 / (1.0 + np.exp(-eta))
        else:
            e = np.exp(eta)
            prob = e / (1.0 + e)
        new = 1 if u[t] < prob else 0
        old = adj[i, j]
        if new != old:
            sign = 1.0 if new == 1 else -1.0
            for q in range(p):
                stats[q] += sign * delta[q]
            ergm_toggle(adj, sp, deg, i, j, new)
        done = t + 1
        if done > burn and (done - burn) % thin == 0 and rec < out.shape[0]:
            for q in range(p):
                out[rec, q] = stats[q]
            rec += 1
    return rec

"""Brute-force reference computations used by several test modules."""

import itertools

import numpy as np

from mcsvgd.models.ergm import Network, ergm_suffstats


def potts_states(shape, K):
    H, W = shape
    return np.array(list(itertools.product(range(K), repeat=H * W))).reshape(-1, H, W)


def potts_stat_loop(values):
    """Equal-neighbour count with plain loops (independent of the compiled kernel)."""
    H, W = values.shape
    s = 0
    for r in range(H):
        for c in range(W):
            if c + 1 < W and values[r, c] == values[r, c + 1]:
                s += 1
            if r + 1 < H and values[r, c] == values[r + 1, c]:
                s += 1
    return s


def boltzmann(stats, theta):
    logw = theta * np.asarray(stats, dtype=float)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def state_index(states, K):
    flat = states.reshape(states.shape[0], -1)
    powers = K ** np.arange(flat.shape[1])[::-1]
    return flat @ powers


def tv(p, q):
    return 0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum()


def all_graphs(n):
    pairs = list(itertools.combinations(range(n), 2))
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        A = np.zeros((n, n), dtype=np.int64)
        for (i, j), b in zip(pairs, bits):
            A[i, j] = A[j, i] = b
        yield A


def ergm_exact(theta, grade, sex):
    """Probabilities of every graph on ``len(grade)`` nodes, keyed by edge bitmask."""
    n = len(grade)
    graphs = list(all_graphs(n))
    stats = np.array([ergm_suffstats(Network(A, grade, sex)) for A in graphs])
    logw = stats @ np.asarray(theta, dtype=float)
    w = np.exp(logw - logw.max())
    return graphs, w / w.sum()


def graph_key(A):
    iu, ju = np.triu_indices(A.shape[0], 1)
    return int("".join(str(int(b)) for b in A[iu, ju]), 2)

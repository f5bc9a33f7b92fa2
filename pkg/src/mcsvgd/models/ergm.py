"""Undirected exponential random graph model with ten statistics.

Statistics, in order: edge count; same-grade edge counts for grades 7..12;
same-sex edge count; geometrically weighted degree (GWD); geometrically
weighted edgewise shared partners (GWESP). Natural parameters are the
identity map.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._kernels import ergm_delta, ergm_gibbs_run
from .base import ExpFamilyModel

N_STATS = 10
GRADES = tuple(range(7, 13))
STAT_NAMES = ("edges",) + tuple(f"grade{g}" for g in GRADES) + ("sex", "gwd", "gwesp")


@dataclass
class Network:
    adjacency: np.ndarray
    grade: np.ndarray
    sex: np.ndarray
    tau_d: float = 0.25
    tau_s: float = 0.25

    def __post_init__(self):
        self.adjacency = np.ascontiguousarray(self.adjacency, dtype=np.int64)
        self.grade = np.ascontiguousarray(self.grade, dtype=np.int64)
        self.sex = np.ascontiguousarray(self.sex, dtype=np.int64)
        A = self.adjacency
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(A) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if self.grade.shape != (self.n_nodes,) or self.sex.shape != (self.n_nodes,):
            raise ValueError("one grade and one sex value per node")

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def with_adjacency(self, adjacency) -> "Network":
        return Network(adjacency, self.grade, self.sex, self.tau_d, self.tau_s)


def _decay(tau):
    return 1.0 - np.exp(-tau)


def gw_weights(kmax: int, tau: float) -> np.ndarray:
    """``e^tau * (1 - (1 - e^-tau)^k)`` for ``k = 0 .. kmax``."""
    k = np.arange(kmax + 1)
    return np.exp(tau) * (1.0 - _decay(tau) ** k)


def ergm_suffstats(network: Network) -> np.ndarray:
    """All ten statistics computed from scratch."""
    A = network.adjacency
    N = network.n_nodes
    iu, ju = np.triu_indices(N, 1)
    edge = A[iu, ju] == 1
    s = np.zeros(N_STATS)
    s[0] = edge.sum()
    same_grade = network.grade[iu] == network.grade[ju]
    for q, g in enumerate(GRADES, start=1):
        s[q] = np.sum(edge & same_grade & (network.grade[iu] == g))
    s[7] = np.sum(edge & (network.sex[iu] == network.sex[ju]))
    deg = A.sum(axis=1)
    s[8] = gw_weights(max(N - 1, 0), network.tau_d)[deg].sum()
    sp = A @ A
    esp = sp[iu[edge], ju[edge]]
    s[9] = gw_weights(max(N - 2, 0), network.tau_s)[esp].sum() if esp.size else 0.0
    return s


def _state(network):
    A = network.adjacency.copy()
    sp = A @ A
    np.fill_diagonal(sp, 0)
    return A, sp, A.sum(axis=1)


def _consts(network):
    return _decay(network.tau_d), _decay(network.tau_s), float(np.exp(network.tau_s))


def ergm_change_stats(network: Network, i: int, j: int) -> np.ndarray:
    """``S(x with ij on) - S(x with ij off)`` computed locally."""
    if i == j:
        raise ValueError("no self-loops: i must differ from j")
    A, sp, deg = _state(network)
    out = np.empty(N_STATS)
    ergm_delta(A, sp, deg, network.grade, network.sex, int(i), int(j), *_consts(network), out)
    return out


def all_change_stats(network: Network):
    """Change statistics for every dyad ``i < j`` (the MPLE design matrix)."""
    A, sp, deg = _state(network)
    iu, ju = np.triu_indices(network.n_nodes, 1)
    D = np.empty((iu.size, N_STATS))
    consts = _consts(network)
    for r in range(iu.size):
        ergm_delta(A, sp, deg, network.grade, network.sex, iu[r], ju[r], *consts, D[r])
    return D, A[iu, ju].astype(float)


class _GibbsChain:
    """Mutable sampler state: adjacency, shared-partner counts, degrees, statistics."""

    def __init__(self, network: Network):
        self.net = network
        self.A, self.sp, self.deg = _state(network)
        self.stats = ergm_suffstats(network)
        self.pair_i, self.pair_j = (a.astype(np.int64) for a in np.triu_indices(network.n_nodes, 1))
        self.consts = _consts(network)

    @property
    def n_dyads(self) -> int:
        return self.pair_i.size

    def run(self, theta, n_updates: int, rng, burn: int, thin: int, n_keep: int) -> np.ndarray:
        theta = np.ascontiguousarray(theta, dtype=float).reshape(N_STATS)
        out = np.empty((n_keep, N_STATS))
        if n_updates == 0 or self.n_dyads == 0:
            return out[:0]
        picks = rng.integers(0, self.n_dyads, size=n_updates)
        u = rng.random(n_updates)
        rec = ergm_gibbs_run(self.A, self.sp, self.deg, self.net.grade, self.net.sex, theta,
                             self.pair_i, self.pair_j, picks, u, *self.consts,
                             self.stats, burn, thin, out)
        return out[:rec]


def ergm_gibbs_cycle(network: Network, theta, rng) -> Network:
    """One random-scan cycle of ``N(N-1)/2`` single-dyad Gibbs updates."""
    chain = _GibbsChain(network)
    chain.run(theta, chain.n_dyads, rng, burn=chain.n_dyads, thin=1, n_keep=0)
    return network.with_adjacency(chain.A)


def ergm_simulate(theta, network: Network, m: int, rng, burnin_cycles: int = 10, thin=None) -> np.ndarray:
    """``m`` statistic vectors from a Gibbs run started at ``network``.

    ``burnin_cycles`` full cycles are discarded, then a statistic vector is
    kept every ``thin`` single-dyad updates (default: one cycle).
    """
    chain = _GibbsChain(network)
    thin = chain.n_dyads if thin is None else int(thin)
    burn = burnin_cycles * chain.n_dyads
    return chain.run(theta, burn + m * thin, rng, burn=burn, thin=thin, n_keep=m)


class ERGMModel(ExpFamilyModel):
    """ERGM with fixed node attributes.

    Auxiliary networks are simulated by random-scan Gibbs started at
    ``start`` (the empty graph unless an observed network is supplied).
    """

    name = "ergm"
    param_dim = N_STATS
    stat_dim = N_STATS

    def __init__(self, grade, sex, tau_d: float = 0.25, tau_s: float = 0.25,
                 burnin_cycles: int = 10, thin=None, start=None):
        grade = np.asarray(grade, dtype=np.int64)
        n = grade.size
        adjacency = np.zeros((n, n), dtype=np.int64) if start is None else start
        self.base = Network(adjacency, grade, sex, tau_d, tau_s)
        self.burnin_cycles = int(burnin_cycles)
        self.thin = thin

    @classmethod
    def for_network(cls, network: Network, **kw) -> "ERGMModel":
        return cls(network.grade, network.sex, network.tau_d, network.tau_s,
                   start=network.adjacency, **kw)

    def _net(self, data):
        if isinstance(data, Network):
            return data
        return self.base.with_adjacency(data)

    def suffstats(self, data) -> np.ndarray:
        return ergm_suffstats(self._net(data))

    def simulate(self, theta, m: int, rng) -> np.ndarray:
        return ergm_simulate(theta, self.base, m, rng, self.burnin_cycles, self.thin)

    def auxiliary_from(self, data, theta, cycles: int, rng) -> np.ndarray:
        chain = _GibbsChain(self._net(data))
        n = cycles * chain.n_dyads
        return chain.run(theta, n, rng, burn=n - 1, thin=1, n_keep=1)[-1]


def mple(network: Network, active=None, iters: int = 100, tol: float = 1e-10):
    """Maximum pseudo-likelihood fit: logistic regression of dyads on change statistics.

    Returns ``(theta_hat, cov)`` over all ten coordinates; coordinates not in
    ``active`` are held at zero. When the fit is separated or the information
    matrix is singular the covariance falls back to the identity.
    """
    D, y = all_change_stats(network)
    idx = np.arange(N_STATS) if active is None else np.asarray(active)
    Z = D[:, idx]
    theta = np.zeros(N_STATS)
    fallback = np.eye(N_STATS)
    if y.min() == y.max():
        warnings.warn("MPLE undefined: network has no edges or no non-edges; using identity covariance")
        return theta, fallback
    beta = np.zeros(idx.size)
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-(Z @ beta)))
        info = Z.T @ ((p * (1.0 - p))[:, None] * Z)
        if np.linalg.cond(info) > 1e12:
            warnings.warn("MPLE information matrix is singular; using identity covariance")
            return theta, fallback
        step = np.linalg.solve(info, Z.T @ (y - p))
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    p = 1.0 / (1.0 + np.exp(-(Z @ beta)))
    info = Z.T @ ((p * (1.0 - p))[:, None] * Z)
    if not np.all(np.isfinite(beta)) or np.linalg.cond(info) > 1e12:
        warnings.warn("MPLE did not converge (separation); using identity covariance")
        return theta, fallback
    theta[idx] = beta
    cov = np.eye(N_STATS)
    sub = np.linalg.inv(info)
    cov[np.ix_(idx, idx)] = 0.5 * (sub + sub.T)
    return theta, cov


def mple_cov(network: Network) -> np.ndarray:
    return mple(network)[1]

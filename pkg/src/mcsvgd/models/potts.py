"""Potts model on a rectangular lattice with rook (4-neighbour) adjacency.

The boundary is free (not toroidal). Labels are stored as ``0 .. K-1``.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from ._kernels import potts_stat, sw_run
from .base import ExpFamilyModel

# Categories for raw ice thickness: 0 no ice, (0, 1000], (1000, 2000], > 2000.
ICE_THRESHOLDS = (0.0, 1000.0, 2000.0)

_BLOCK_DOUBLES = 1 << 20


@dataclass
class Lattice:
    values: np.ndarray
    K: int

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.int64)
        if self.values.ndim != 2:
            raise ValueError("lattice values must be a 2-d grid")
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.values.size and (self.values.min() < 0 or self.values.max() >= self.K):
            raise ValueError(f"labels must lie in 0..{self.K - 1}")

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_pairs(self) -> int:
        H, W = self.values.shape
        return H * (W - 1) + (H - 1) * W


def categorize_thickness(thickness) -> np.ndarray:
    """Map raw ice thickness to the four categories 0..3."""
    t = np.asarray(thickness, dtype=float)
    out = np.zeros(t.shape, dtype=np.int64)
    out[t > ICE_THRESHOLDS[0]] = 1
    out[t > ICE_THRESHOLDS[1]] = 2
    out[t > ICE_THRESHOLDS[2]] = 3
    return out


def potts_suffstat(lattice) -> int:
    """Number of unordered neighbour pairs with equal labels."""
    values = lattice.values if isinstance(lattice, Lattice) else np.asarray(lattice)
    return int(potts_stat(np.ascontiguousarray(values, dtype=np.int64)))


def _bond_prob(theta) -> float:
    theta = float(np.asarray(theta).reshape(-1)[0])
    if theta < 0:
        raise ValueError(f"Swendsen-Wang needs theta >= 0 (ferromagnetic), got {theta}")
    return float(-np.expm1(-theta))


def _sw_cycles(values, theta, K, cycles, rng, record_states=False):
    """Run ``cycles`` SW cycles on ``values`` in place; return per-cycle stats (and states)."""
    p_bond = _bond_prob(theta)
    H, W = values.shape
    width = 3 * H * W
    stats = np.empty(cycles, dtype=np.int64)
    states = np.empty((cycles if record_states else 0, H, W), dtype=np.int64)
    block = max(1, _BLOCK_DOUBLES // width)
    dummy = np.empty((0, H, W), dtype=np.int64)
    for start in range(0, cycles, block):
        stop = min(cycles, start + block)
        U = rng.random((stop - start, width))
        out_states = states[start:stop] if record_states else dummy
        sw_run(values, p_bond, K, U, stats[start:stop], out_states, record_states)
    return (stats, states) if record_states else stats


def swendsen_wang_step(lattice: Lattice, theta, rng) -> Lattice:
    """One full Swendsen-Wang cycle; returns a new lattice."""
    values = lattice.values.copy()
    _sw_cycles(values, theta, lattice.K, 1, rng)
    return Lattice(values, lattice.K)


def potts_simulate(theta, m: int, cycles: int, burnin: int, rng, shape, K: int) -> np.ndarray:
    """``S(y)`` for the last ``m`` of ``cycles`` SW cycles from a uniform random start."""
    if cycles < burnin + m:
        raise ValueError("cycles must be at least burnin + m")
    if m == 0:
        _bond_prob(theta)
        return np.empty(0, dtype=float)
    values = rng.integers(0, K, size=shape).astype(np.int64)
    stats = _sw_cycles(values, theta, K, cycles, rng)
    return stats[-m:].astype(float)


class _Enumeration:
    """All ``K**(H*W)`` configurations of a tiny lattice with their statistics."""

    LIMIT = 1 << 16

    def __init__(self, shape, K):
        H, W = shape
        if K ** (H * W) > self.LIMIT:
            raise ValueError("exact enumeration only supports tiny lattices")
        self.states = np.array(list(product(range(K), repeat=H * W)), dtype=np.int64).reshape(-1, H, W)
        self.stats = np.array([potts_stat(s) for s in self.states], dtype=float)

    def probs(self, theta):
        logw = float(np.asarray(theta).reshape(-1)[0]) * self.stats
        w = np.exp(logw - logw.max())
        return w / w.sum()


class PottsModel(ExpFamilyModel):
    """``h(x | theta) = exp(theta * S(x))`` with ``S`` the equal-neighbour count.

    ``sampler="sw"`` (default) draws auxiliary data by Swendsen-Wang; ``"exact"``
    samples by full enumeration and is only available for tiny lattices.
    """

    name = "potts"
    param_dim = 1
    stat_dim = 1

    def __init__(self, shape, K: int, cycles: int = 80, burnin: int = 30, sampler: str = "sw"):
        self.shape = tuple(int(s) for s in shape)
        self.K = int(K)
        self.cycles = int(cycles)
        self.burnin = int(burnin)
        if sampler not in ("sw", "exact"):
            raise ValueError(f"unknown Potts sampler {sampler!r}")
        self.sampler = sampler
        self._enum = _Enumeration(self.shape, self.K) if sampler == "exact" else None

    def suffstats(self, data) -> np.ndarray:
        return np.array([float(potts_suffstat(data))])

    def check_theta(self, theta) -> None:
        if self.sampler == "sw":
            _bond_prob(theta)

    def simulate(self, theta, m: int, rng) -> np.ndarray:
        if self._enum is not None:
            idx = rng.choice(len(self._enum.stats), size=m, p=self._enum.probs(theta))
            return self._enum.stats[idx][:, None]
        cycles = max(self.cycles, self.burnin + m)
        return potts_simulate(theta, m, cycles, self.burnin, rng, self.shape, self.K)[:, None]

    def auxiliary_from(self, data, theta, cycles: int, rng) -> np.ndarray:
        if self._enum is not None:
            return self.simulate(theta, 1, rng)[0]
        values = np.array(data.values if isinstance(data, Lattice) else data, dtype=np.int64)
        stats = _sw_cycles(values, theta, self.K, cycles, rng)
        return np.array([float(stats[-1])])

    def exact_probs(self, theta) -> np.ndarray:
        """Boltzmann probabilities over all states (tiny lattices only)."""
        if self._enum is None:
            return _Enumeration(self.shape, self.K).probs(theta)
        return self._enum.probs(theta)


def _neighbor_label_counts(values, K):
    H, W = values.shape
    counts = np.zeros((H, W, K))
    onehot = np.eye(K)[values]
    counts[:, 1:] += onehot[:, :-1]
    counts[:, :-1] += onehot[:, 1:]
    counts[1:, :] += onehot[:-1, :]
    counts[:-1, :] += onehot[1:, :]
    return counts.reshape(-1, K), values.reshape(-1)


def potts_mple(lattice: Lattice, theta0: float = 0.0, iters: int = 50):
    """Maximum pseudo-likelihood estimate of ``theta`` and its inverse-information variance."""
    counts, labels = _neighbor_label_counts(lattice.values, lattice.K)
    own = counts[np.arange(labels.size), labels]
    theta = float(theta0)
    info = 1.0
    for _ in range(iters):
        logits = theta * counts
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        mean = (p * counts).sum(axis=1)
        var = (p * counts**2).sum(axis=1) - mean**2
        grad = (own - mean).sum()
        info = var.sum()
        if info <= 0:
            break
        step = grad / info
        theta += step
        if abs(step) < 1e-10:
            break
    return theta, 1.0 / info if info > 0 else 1.0

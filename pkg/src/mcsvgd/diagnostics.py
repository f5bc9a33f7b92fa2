"""Posterior summaries and convergence measures."""

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .kernel import KernelConfig, _as_matrix, kernel_matrix

SUMMARY_HEADER = ("coord", "mean", "hpd_low", "hpd_high", "prob")


def ksd_vstat(particles, scores, cfg: KernelConfig = KernelConfig()) -> float:
    """Kernel Stein discrepancy (V-statistic) with the RBF kernel.

    ``scores`` is an ``(n, d)`` array of (possibly estimated) target scores
    at the particles, or a callable returning the score at one particle.
    """
    x = _as_matrix(particles)
    n, d = x.shape
    if callable(scores):
        s = np.array([np.atleast_1d(scores(xi)) for xi in x], dtype=float)
    else:
        s = np.asarray(scores, dtype=float)
    s = s.reshape(n, -1) if s.size == n * d else s
    if s.shape != (n, d):
        raise ValueError(f"dimension mismatch: particles {x.shape} vs scores {s.shape}")
    h = cfg.resolve(x)
    K, r = kernel_matrix(x, h)  # r[i, j] = x_i - x_j
    sq = np.einsum("ijd,ijd->ij", r, r)
    ss = s @ s.T
    si_r = np.einsum("id,ijd->ij", s, r)
    sj_r = np.einsum("jd,ijd->ij", s, r)
    u = K * (ss + (2.0 / h) * (si_r - sj_r) + 2.0 * d / h - 4.0 * sq / h**2)
    return math.sqrt(max(float(u.mean()), 0.0))


def hpd_interval(samples, prob: float = 0.95):
    """Shortest window holding ``ceil(prob * n)`` sorted samples (ties: leftmost)."""
    s = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = s.size
    if n == 0:
        raise ValueError("HPD interval of an empty sample")
    if not 0 < prob < 1:
        raise ValueError("prob must lie in (0, 1)")
    c = min(n, max(1, math.ceil(prob * n - 1e-9)))
    widths = s[c - 1:] - s[: n - c + 1]
    i = int(np.argmin(widths))
    return float(s[i]), float(s[i + c - 1])


@dataclass
class SummaryRow:
    coordinate: int
    mean: float
    hpd_low: float
    hpd_high: float
    prob: float = 0.95

    def as_csv_row(self):
        return [self.coordinate, repr(self.mean), repr(self.hpd_low), repr(self.hpd_high), repr(self.prob)]


def _samples_matrix(obj):
    for attr in ("particles", "samples"):
        if hasattr(obj, attr):
            obj = getattr(obj, attr)
            break
    return _as_matrix(obj)


def summarize(samples, prob: float = 0.95):
    """Per-coordinate mean and HPD interval of a particle set or chain.

    Coordinates are numbered from 1 to match the ``theta_1..theta_d`` headers.
    """
    x = _samples_matrix(samples)
    if x.shape[0] == 0:
        raise ValueError("nothing to summarize")
    rows = []
    for q in range(x.shape[1]):
        lo, hi = hpd_interval(x[:, q], prob)
        rows.append(SummaryRow(q + 1, float(np.mean(x[:, q])), lo, hi, prob))
    return rows


def write_summary_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            w.writerow(r.as_csv_row())


def read_summary_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_HEADER:
            raise ValueError(f"{path}: expected header {','.join(SUMMARY_HEADER)}")
        return [SummaryRow(int(r["coord"]), float(r["mean"]), float(r["hpd_low"]),
                           float(r["hpd_high"]), float(r["prob"])) for r in reader]


def summary_dicts(rows):
    return [asdict(r) for r in rows]


def finite_diff_score(model, data, theta, step: float = 1e-5) -> np.ndarray:
    """Central differences of ``theta -> log h(x | theta)``."""
    if not step > 0:
        raise ValueError("step must be positive")
    stats = model.suffstats(data)
    theta = np.asarray(theta, dtype=float).reshape(model.param_dim)
    out = np.empty(theta.size)
    for q in range(theta.size):
        e = np.zeros(theta.size)
        e[q] = step
        out[q] = (model.log_h(stats, theta + e) - model.log_h(stats, theta - e)) / (2 * step)
    return out


def effective_sample_size(chain) -> float:
    """Autocorrelation ESS of a 1-d chain (Geyer initial positive sequence)."""
    x = np.asarray(chain, dtype=float).reshape(-1)
    n = x.size
    if n < 4:
        return float(n)
    x = x - x.mean()
    var = x @ x / n
    if var == 0:
        return float(n)
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = acf[k] + acf[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / max(tau, 1e-12))

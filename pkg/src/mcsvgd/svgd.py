"""Stein variational gradient descent with Monte Carlo scores.

Particles move along the kernelized Stein direction. When the score involves
an intractable normalizer, ``grad log Z(theta)`` is replaced by an average of
``J(theta)^T S(y)`` over simulated data: either fresh draws at ``theta`` or
self-normalized importance reweighting of draws cached at a nearby ``psi``.
"""

import csv
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .diagnostics import ksd_vstat
from .kernel import BANDWIDTH_FLOOR, KernelConfig, kernel_matrix
from .models.base import FlatPrior, make_prior


class NumericalError(FloatingPointError):
    """Non-finite direction, degenerate importance weights and similar failures."""


@dataclass
class ParticleSet:
    particles: np.ndarray
    iteration: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        x = np.array(self.particles, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError("need at least one particle as an (n, d) array")
        if not np.all(np.isfinite(x)):
            raise ValueError("particles must be finite")
        self.particles = x

    @property
    def n(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]


@dataclass(frozen=True)
class CacheEntry:
    psi: np.ndarray
    suffstats: np.ndarray
    created_at: int

    @property
    def m(self) -> int:
        return self.suffstats.shape[0]


@dataclass(frozen=True)
class CacheSnapshot:
    """Read-only view of the cache as it stood before an iteration."""

    entries: tuple
    psi: np.ndarray

    def __len__(self):
        return len(self.entries)


class SnisCache:
    """Append-only store of simulated statistics keyed by the simulating parameter."""

    def __init__(self, entries=()):
        self.entries = []
        for e in entries:
            self.append(e)

    def append(self, entry: CacheEntry) -> None:
        self.entries.append(entry)

    def __len__(self):
        return len(self.entries)

    def snapshot(self) -> CacheSnapshot:
        entries = tuple(self.entries)
        psi = np.array([e.psi for e in entries]) if entries else np.empty((0, 0))
        return CacheSnapshot(entries, psi)


@dataclass
class GradientEstimate:
    grad: np.ndarray
    ess: float
    source: str  # "snis" or "fresh-mc"


def _parse_threshold(value, m):
    if value is None:
        return m / 1.5
    if isinstance(value, str):
        s = value.replace(" ", "")
        if s.startswith("m/"):
            return m / float(s[2:])
        return float(s)
    return float(value)


@dataclass
class SvgdConfig:
    """Run settings.

    ``ess_threshold`` is a number or a string ``"m/<k>"``; the default is
    ``m/1.5``. ``naive=True`` disables the cache so every particle draws
    fresh samples at every iteration. ``init_cov=None`` means the identity.
    """

    n_particles: int = 100
    m_mc: int = 50
    step_size: float = 5e-4
    ess_threshold: object = None
    max_iters: int = 500
    kl_check_every: int = 100
    kl_stop_delta: float = 0.01
    map_iters: int = 300
    init_cov: object = None
    kernel: KernelConfig = field(default_factory=KernelConfig)
    naive: bool = False

    def __post_init__(self):
        if self.n_particles < 1 or self.m_mc < 1:
            raise ValueError("n_particles and m_mc must be positive")
        if not self.step_size >= 0:
            raise ValueError("step size must be non-negative")
        if self.max_iters < 0 or self.kl_check_every < 1 or self.kl_stop_delta < 0:
            raise ValueError("invalid iteration or stopping settings")

    @property
    def threshold(self) -> float:
        return _parse_threshold(self.ess_threshold, self.m_mc)

    def check(self, dim: int):
        """Warn about settings outside the recommended ranges; returns the messages."""
        msgs = []
        if self.n_particles > 1 and self.n_particles < 30 * dim:
            msgs.append(f"n_particles={self.n_particles} is below 30*d={30 * dim}")
        if self.m_mc < 50:
            msgs.append(f"m_mc={self.m_mc} is below 50")
        if not 1e-4 <= self.step_size <= 1e-3:
            msgs.append(f"step_size={self.step_size} is outside [1e-4, 1e-3]")
        if self.step_size * self.max_iters > 1:
            msgs.append(f"step_size*max_iters={self.step_size * self.max_iters:g} exceeds 1")
        for msg in msgs:
            warnings.warn(msg, stacklevel=3)
        return msgs


# ---------------------------------------------------------------------------
# Direction and step
# ---------------------------------------------------------------------------

def _resolve_h(cfg: KernelConfig, x) -> float:
    if cfg.mode == "median" and x.shape[0] < 2:
        return cfg.floor if cfg.floor > 0 else BANDWIDTH_FLOOR
    return cfg.resolve(x)


def svgd_direction(particles, grads, cfg: KernelConfig = KernelConfig()) -> np.ndarray:
    """``phi(x_i) = mean_j [k(x_j, x_i) g_j + grad_{x_j} k(x_j, x_i)]``."""
    x = getattr(particles, "particles", particles)
    x = np.asarray(x, dtype=float)
    x = x[:, None] if x.ndim == 1 else x
    g = np.asarray(grads, dtype=float).reshape(x.shape[0], -1) if np.size(grads) == x.size else None
    if g is None or g.shape != x.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} particles vs grads of shape {np.shape(grads)}")
    n = x.shape[0]
    h = _resolve_h(cfg, x)
    K, diff = kernel_matrix(x, h)
    drive = K.T @ g
    repulse = -(2.0 / h) * np.einsum("ji,jid->id", K, diff)
    return (drive + repulse) / n


def svgd_step(particles: ParticleSet, directions, eps: float) -> ParticleSet:
    directions = np.asarray(directions, dtype=float).reshape(particles.particles.shape)
    if not eps >= 0:
        raise ValueError("step size must be non-negative")
    bad = ~np.all(np.isfinite(directions), axis=1)
    if np.any(bad):
        raise NumericalError(f"non-finite SVGD direction at particle {int(np.argmax(bad))}")
    return ParticleSet(particles.particles + eps * directions, particles.iteration + 1, particles.rng_seed)


# ---------------------------------------------------------------------------
# Score estimates
# ---------------------------------------------------------------------------

def _weighted_score(theta, model, x_stats, stats, w, prior) -> np.ndarray:
    J = model.natural_jacobian(theta)
    prior_grad = np.zeros(model.param_dim) if prior is None else prior.grad(theta)
    return J.T @ x_stats - w @ (stats @ J) + prior_grad


def mc_gradient_from_stats(theta, model, x_stats, stats, prior=None) -> GradientEstimate:
    """Plain Monte Carlo score from statistics drawn at ``theta``."""
    stats = np.asarray(stats, dtype=float)
    m = stats.shape[0]
    w = np.full(m, 1.0 / m)
    return GradientEstimate(_weighted_score(theta, model, x_stats, stats, w, prior), float(m), "fresh-mc")


def mc_gradient(theta, model, m: int, rng, x_stats, prior=None):
    """Fresh-simulation score estimate; returns ``(GradientEstimate, stats)``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    theta = np.asarray(theta, dtype=float).reshape(model.param_dim)
    stats = np.asarray(model.simulate(theta, m, rng), dtype=float).reshape(m, model.stat_dim)
    return mc_gradient_from_stats(theta, model, x_stats, stats, prior), stats


def snis_weights(theta, entry: CacheEntry, model):
    """Normalized importance weights ``h(y_k|theta)/h(y_k|psi)`` and their ESS."""
    theta = np.asarray(theta, dtype=float).reshape(model.param_dim)
    if np.shape(entry.psi) != theta.shape:
        raise ValueError("cache entry dimension does not match theta")
    d_eta = model.natural_params(theta) - model.natural_params(entry.psi)
    logr = entry.suffstats @ d_eta
    top = np.max(logr)
    w = np.exp(logr - top)
    total = w.sum()
    if not np.isfinite(top) or not np.isfinite(total) or total <= 0:
        raise NumericalError("weight degeneracy: importance weights are all zero or non-finite")
    # same as 1 / sum(w_norm^2), but exact when all weights are equal
    ess = float(total * total / (w @ w))
    return w / total, ess


def snis_gradient(theta, x_stats, entry: CacheEntry, model, prior=None) -> GradientEstimate:
    w, ess = snis_weights(theta, entry, model)
    theta = np.asarray(theta, dtype=float).reshape(model.param_dim)
    return GradientEstimate(_weighted_score(theta, model, x_stats, entry.suffstats, w, prior), ess, "snis")


def select_cache_entry(theta, cache) -> CacheEntry:
    """Nearest cached ``psi`` in Euclidean distance; ties go to the earliest entry."""
    snap = cache if isinstance(cache, CacheSnapshot) else cache.snapshot()
    if len(snap) == 0:
        raise ValueError("cache is empty; seed it before looking up entries")
    d2 = np.sum((snap.psi - np.asarray(theta, dtype=float)) ** 2, axis=1)
    best = np.flatnonzero(d2 == d2.min())
    i = min(best, key=lambda k: (snap.entries[k].created_at, k))
    return snap.entries[i]


# ---------------------------------------------------------------------------
# Initialization and stopping
# ---------------------------------------------------------------------------

def init_particles(theta_map, cov, n: int, rng, rng_seed: int = 0) -> ParticleSet:
    """``n`` draws from ``N(theta_map, cov)``.

    Cholesky is tried first, then with ``1e-10`` diagonal jitter; a
    positive semi-definite but singular ``cov`` is factored through its
    eigendecomposition so that e.g. ``cov = 0`` gives identical particles.
    """
    mu = np.atleast_1d(np.asarray(theta_map, dtype=float))
    d = mu.size
    cov = np.asarray(cov, dtype=float).reshape(d, d)
    if not np.allclose(cov, cov.T, atol=1e-12, rtol=1e-9):
        raise ValueError("covariance must be symmetric")
    cov = 0.5 * (cov + cov.T)
    L = None
    for jitter in (0.0, 1e-10):
        try:
            L = np.linalg.cholesky(cov + jitter * np.eye(d))
            break
        except np.linalg.LinAlgError:
            continue
    if L is None or not np.any(cov):
        vals, vecs = np.linalg.eigh(cov)
        scale = max(1.0, float(np.abs(vals).max()))
        if vals.min() < -1e-10 * scale:
            raise ValueError("covariance is not positive semi-definite")
        L = vecs * np.sqrt(np.clip(vals, 0.0, None))
    z = rng.standard_normal((n, d))
    return ParticleSet(mu + z @ L.T, 0, rng_seed)


def knn_kl(current, previous) -> float:
    """1-nearest-neighbour estimate of ``KL(current || previous)``.

    Distances below ``1e-12`` are clamped; the nearest *previous* point
    ignores points at distance ``<= 1e-12`` so that identical clouds give
    ``log(m / (n - 1))`` rather than diverging.
    """
    x = np.asarray(getattr(current, "particles", current), dtype=float)
    y = np.asarray(getattr(previous, "particles", previous), dtype=float)
    x = x[:, None] if x.ndim == 1 else x
    y = y[:, None] if y.ndim == 1 else y
    n, d = x.shape
    m = y.shape[0]
    if n < 2 or m < 2:
        raise ValueError("KL estimate needs at least 2 particles in each set")
    if y.shape[1] != d:
        raise ValueError("dimension mismatch between particle sets")
    rho = cKDTree(x).query(x, k=2)[0][:, 1]
    k = min(m, 3)
    dist = cKDTree(y).query(x, k=k)[0].reshape(n, k)
    far = dist > 1e-12
    nu = np.where(far.any(axis=1), dist[np.arange(n), np.argmax(far, axis=1)], dist[:, -1])
    rho = np.maximum(rho, 1e-12)
    nu = np.maximum(nu, 1e-12)
    return float(d / n * np.sum(np.log(nu / rho)) + math.log(m / (n - 1)))


@dataclass
class StoppingState:
    """KL history across checkpoints for the two-quiet-checkpoints rule."""

    kl: list = field(default_factory=list)
    quiet: int = 0
    flags: list = field(default_factory=list)


def stopping_check(current, previous, cfg: SvgdConfig, state: StoppingState = None):
    """Return ``(kl, stop)``; ``kl`` is NaN (and flagged) with fewer than 2 particles."""
    state = StoppingState() if state is None else state
    try:
        kl = knn_kl(current, previous)
    except ValueError as exc:
        if "at least 2" not in str(exc):
            raise
        state.flags.append("kl undefined: fewer than 2 particles")
        return float("nan"), False
    if state.kl and np.isfinite(state.kl[-1]):
        if abs(kl - state.kl[-1]) < cfg.kl_stop_delta:
            state.quiet += 1
        else:
            state.quiet = 0
    state.kl.append(kl)
    return kl, state.quiet >= 2


# ---------------------------------------------------------------------------
# Main loop
# ---------------------------------------------------------------------------

@dataclass
class RunTrace:
    """What happened during a run.

    ``checkpoints`` holds one dict per check (iteration, kl, ksd,
    ess_refresh_count, elapsed_seconds). ``refresh_counts[t]`` is the
    number of particles that drew fresh samples when scoring iteration
    ``t`` and ``cache_sizes[t]`` the size of the snapshot they looked up
    against. Scores are evaluated once more after the last step, so these
    lists have ``iterations + 1`` entries and ``final_scores`` holds the
    score estimates at the returned particles.
    """

    checkpoints: list = field(default_factory=list)
    refresh_counts: list = field(default_factory=list)
    cache_sizes: list = field(default_factory=list)
    min_ess: list = field(default_factory=list)
    final_scores: np.ndarray = None
    ksd_initial: float = float("nan")
    ksd_final: float = float("nan")
    iterations: int = 0
    stopped_early: bool = False
    wall_seconds: float = 0.0
    sim_seconds: float = 0.0
    flags: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    cache: SnisCache = None


def particle_rng(seed: int, t: int, i: int):
    """Independent stream for particle ``i`` at iteration ``t``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t, i)))


def _seed_from(rng) -> int:
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return int(rng.integers(0, 2**63 - 1))


class _Evaluator:
    """Per-particle score estimation for one iteration against a fixed snapshot."""

    def __init__(self, model, x_stats, m, threshold, prior, seed, naive):
        self.model = model
        self.x_stats = x_stats
        self.m = m
        self.threshold = threshold
        self.prior = prior
        self.seed = seed
        self.naive = naive

    def __call__(self, args):
        t, i, theta, snap = args
        try:
            self.model.check_theta(theta)
        except ValueError as exc:
            raise NumericalError(f"iteration {t}, particle {i} left the parameter support: {exc}") from exc
        try:
            if not self.naive and len(snap):
                entry = select_cache_entry(theta, snap)
                est = snis_gradient(theta, self.x_stats, entry, self.model, self.prior)
                if est.ess >= self.threshold:
                    return est, None, 0.0
            t0 = time.perf_counter()
            est, stats = mc_gradient(theta, self.model, self.m, particle_rng(self.seed, t, i),
                                     self.x_stats, self.prior)
            sim = time.perf_counter() - t0
        except Exception as exc:
            raise type(exc)(f"iteration {t}, particle {i}: {exc}") from exc
        entry = None if self.naive else CacheEntry(theta.copy(), stats, t)
        return est, entry, sim


def seed_cache(model, theta, m: int, rng, created_at: int = -1) -> SnisCache:
    """A cache holding one fresh batch of ``m`` simulations at ``theta``."""
    theta = np.asarray(theta, dtype=float).reshape(model.param_dim)
    stats = np.asarray(model.simulate(theta, m, rng), dtype=float).reshape(m, model.stat_dim)
    return SnisCache([CacheEntry(theta.copy(), stats, created_at)])


def _write_checkpoint(directory, ps: ParticleSet, record: dict) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = directory / f"checkpoint_{ps.iteration:05d}"
    with open(stem.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"theta_{q + 1}" for q in range(ps.dim)])
        for row in ps.particles:
            w.writerow([repr(float(v)) for v in row])
    with open(stem.with_suffix(".json"), "w") as fh:
        json.dump({k: record[k] for k in ("iteration", "kl", "ess_refresh_count", "elapsed_seconds")}, fh)


def run_mcsvgd(model, data, cfg: SvgdConfig, rng, particles=None, cache=None, prior=None,
               workers: int = 1, checkpoint_dir=None, x_stats=None):
    """Run MC-SVGD; returns ``(ParticleSet, RunTrace)``.

    ``particles`` defaults to draws around a single-particle MAP estimate.
    ``cache`` defaults to empty, in which case every particle simulates at
    the first iteration. Per-particle work runs on ``workers`` threads and
    the result is identical for any worker count.
    """
    t_start = time.perf_counter()
    seed = _seed_from(rng)
    prior = FlatPrior() if prior is None else make_prior(prior)
    x_stats = model.suffstats(data) if x_stats is None else np.asarray(x_stats, dtype=float)
    trace = RunTrace()
    setup_rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2**31,)))
    if particles is None:
        start = map_estimate(model, data, cfg.map_iters, setup_rng, cfg=cfg, workers=workers, x_stats=x_stats)
        cov = np.eye(model.param_dim) if cfg.init_cov is None else cfg.init_cov
        particles = init_particles(start, cov, cfg.n_particles, setup_rng, seed)
    elif not isinstance(particles, ParticleSet):
        particles = ParticleSet(particles, 0, seed)
    ps = particles
    if ps.dim != model.param_dim:
        raise ValueError(f"particles have dimension {ps.dim}, model expects {model.param_dim}")
    trace.warnings = cfg.check(ps.dim) if ps.n > 1 else []
    cache = SnisCache() if cache is None else cache
    trace.cache = cache
    threshold = cfg.threshold
    evaluator = _Evaluator(model, x_stats, cfg.m_mc, threshold, prior, seed, cfg.naive)
    stopping = StoppingState()
    last_ckpt = ps
    refresh_window = 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def scores(t, current):
        snap = cache.snapshot()
        tasks = [(t, i, current.particles[i], snap) for i in range(current.n)]
        results = list(pool.map(evaluator, tasks)) if pool else [evaluator(a) for a in tasks]
        for _, entry, _ in results:
            if entry is not None:
                cache.append(entry)
        grads = np.array([r[0].grad for r in results])
        refreshed = sum(r[0].source == "fresh-mc" for r in results)
        trace.sim_seconds += sum(r[2] for r in results)
        return grads, refreshed, len(snap), min(r[0].ess for r in results)

    def ksd(current, grads):
        if current.n < 2 and cfg.kernel.mode == "median":
            return float("nan")
        return ksd_vstat(current.particles, grads, cfg.kernel)

    try:
        t = 0
        while True:
            grads, refreshed, size, min_ess = scores(t, ps)
            trace.refresh_counts.append(int(refreshed))
            trace.cache_sizes.append(size)
            trace.min_ess.append(min_ess)
            refresh_window += refreshed
            if t == 0:
                trace.ksd_initial = ksd(ps, grads)
            stop = False
            if t > 0 and t % cfg.kl_check_every == 0:
                kl, stop = stopping_check(ps, last_ckpt, cfg, stopping)
                record = {"iteration": t, "kl": None if math.isnan(kl) else kl,
                          "ksd": ksd(ps, grads), "ess_refresh_count": int(refresh_window),
                          "elapsed_seconds": time.perf_counter() - t_start}
                trace.checkpoints.append(record)
                if checkpoint_dir is not None:
                    _write_checkpoint(checkpoint_dir, ps, record)
                last_ckpt = ps
                refresh_window = 0
            if stop or t >= cfg.max_iters:
                trace.stopped_early = t < cfg.max_iters
                trace.final_scores = grads
                trace.ksd_final = trace.ksd_initial if t == 0 else ksd(ps, grads)
                break
            ps = svgd_step(ps, svgd_direction(ps, grads, cfg.kernel), cfg.step_size)
            t += 1
        trace.iterations = t
    finally:
        if pool is not None:
            pool.shutdown()
    trace.flags = list(stopping.flags)
    trace.wall_seconds = time.perf_counter() - t_start
    return ps, trace


def map_estimate(model, data, iters: int, rng, start=None, cfg: SvgdConfig = None,
                 workers: int = 1, x_stats=None, return_trace: bool = False):
    """Single-particle run under a flat prior, from ``start`` (default zeros).

    With one particle the kernel terms vanish and each update is
    ``theta + eps * score``. The cache is used as in the main run unless
    ``cfg.naive`` is set.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    cfg = SvgdConfig() if cfg is None else cfg
    run_cfg = replace(cfg, n_particles=1, max_iters=iters, kl_check_every=max(iters, 1),
                      kl_stop_delta=0.0)
    theta0 = np.zeros(model.param_dim) if start is None else np.asarray(start, dtype=float)
    ps = ParticleSet(theta0.reshape(1, model.param_dim))
    out, trace = run_mcsvgd(model, data, run_cfg, rng, particles=ps, prior=FlatPrior(),
                            workers=workers, x_stats=x_stats)
    theta = out.particles[0].copy()
    return (theta, trace) if return_trace else theta

"""Exchange algorithm and double Metropolis-Hastings.

Both use an auxiliary dataset ``y`` simulated at the proposal so the
acceptance ratio

    p(theta*) h(x|theta*) h(y|theta) / [p(theta) h(x|theta) h(y|theta*)]

contains no normalizing constant. Exchange needs an exact draw of ``y``;
DMH instead runs a short MCMC chain at ``theta*`` started from the data.
"""

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .models.base import FlatPrior, make_prior

KINDS = ("exchange", "dmh")


@dataclass
class McmcChain:
    samples: np.ndarray
    acceptance_rate: float
    proposal_sd: np.ndarray
    kind: str = "exchange"
    iters: int = 0
    burnin: int = 0
    seed: int = None
    wall_seconds: float = 0.0
    sim_seconds: float = 0.0
    tuning: list = field(default_factory=list)

    @property
    def particles(self):
        return self.samples


class _Proposal:
    """Gaussian random walk: diagonal (vector ``sd``) or full (matrix ``sd`` = covariance)."""

    def __init__(self, sd, dim):
        sd = np.asarray(sd, dtype=float)
        if sd.ndim == 0:
            sd = np.full(dim, float(sd))
        self.sd = sd
        if sd.ndim == 2:
            if sd.shape != (dim, dim):
                raise ValueError("proposal covariance has the wrong shape")
            self.L = np.linalg.cholesky(sd + 1e-12 * np.eye(dim)) if np.any(sd) else np.zeros((dim, dim))
        else:
            if sd.shape != (dim,) or np.any(sd < 0):
                raise ValueError("proposal_sd must be non-negative, one per coordinate")
            self.L = None

    def draw(self, theta, rng):
        z = rng.standard_normal(theta.size)
        return theta + (self.L @ z if self.L is not None else self.sd * z)

    def scaled(self, factor):
        return self.sd * (factor**2 if self.sd.ndim == 2 else factor)


def _log_ratio(model, prior, x_stats, y_stats, theta, prop) -> float:
    lp = prior.logpdf(prop) - prior.logpdf(theta)
    return float(lp + model.log_h(x_stats, prop) + model.log_h(y_stats, theta)
                 - model.log_h(x_stats, theta) - model.log_h(y_stats, prop))


def _in_support(model, prior, prop) -> bool:
    if not np.isfinite(prior.logpdf(prop)):
        return False
    try:
        model.check_theta(prop)
    except ValueError:
        return False
    return True


def _step(kind, theta, data, model, proposal, rng, prior, x_stats, inner_cycles):
    prop = proposal.draw(theta, rng)
    if not _in_support(model, prior, prop):
        return theta, False
    if kind == "exchange":
        y_stats = model.simulate(prop, 1, rng)[0]
    else:
        y_stats = model.auxiliary_from(data, prop, inner_cycles, rng)
    log_r = _log_ratio(model, prior, x_stats, y_stats, theta, prop)
    if np.log(rng.random()) < log_r:
        return prop, True
    return theta, False


def _prep(theta, model, data, prior, x_stats):
    theta = np.asarray(theta, dtype=float).reshape(model.param_dim)
    prior = FlatPrior() if prior is None else make_prior(prior)
    x_stats = model.suffstats(data) if x_stats is None else np.asarray(x_stats, dtype=float)
    return theta, prior, x_stats


def exchange_step(theta, data, model, proposal_sd, rng, prior=None, x_stats=None):
    """One exchange update; returns ``(theta_new, accepted)``."""
    theta, prior, x_stats = _prep(theta, model, data, prior, x_stats)
    return _step("exchange", theta, data, model, _Proposal(proposal_sd, theta.size), rng,
                 prior, x_stats, 0)


def dmh_step(theta, data, model, inner_cycles, proposal_sd, rng, prior=None, x_stats=None):
    """One double Metropolis-Hastings update with an inner chain started at the data."""
    if inner_cycles < 1:
        raise ValueError("inner_cycles must be at least 1")
    theta, prior, x_stats = _prep(theta, model, data, prior, x_stats)
    return _step("dmh", theta, data, model, _Proposal(proposal_sd, theta.size), rng,
                 prior, x_stats, inner_cycles)


def tune_proposal(kind, model, data, theta0, proposal_sd, rng, inner_cycles: int = 1,
                  prior=None, batch: int = 200, rounds: int = 20, target=(0.2, 0.4)):
    """Rescale the proposal until a batch acceptance rate falls inside ``target``.

    Returns ``(proposal_sd, theta_end, history)`` where ``history`` lists
    ``(scale_applied, acceptance_rate)`` per batch.
    """
    theta, prior, x_stats = _prep(theta0, model, data, prior, None)
    sd = np.asarray(proposal_sd, dtype=float)
    history = []
    mid = 0.5 * (target[0] + target[1])
    for _ in range(rounds):
        proposal = _Proposal(sd, theta.size)
        acc = 0
        for _ in range(batch):
            theta, ok = _step(kind, theta, data, model, proposal, rng, prior, x_stats, inner_cycles)
            acc += ok
        rate = acc / batch
        history.append(rate)
        if target[0] <= rate <= target[1]:
            break
        factor = float(np.clip(rate / mid, 0.25, 2.0)) if rate > 0 else 0.25
        sd = proposal.scaled(factor)
    return sd, theta, history


def run_chain(kind, model, data, theta0, iters: int, burnin: int, proposal_sd, rng,
              inner_cycles: int = 1, prior=None, seed=None, x_stats=None) -> McmcChain:
    """Run ``iters`` updates and keep the ``iters - burnin`` after burn-in."""
    if kind not in KINDS:
        raise ValueError(f"unknown chain kind {kind!r}")
    if iters <= burnin:
        raise ValueError("iters must exceed burnin")
    if kind == "dmh" and inner_cycles < 1:
        raise ValueError("inner_cycles must be at least 1")
    t0 = time.perf_counter()
    theta, prior, x_stats = _prep(theta0, model, data, prior, x_stats)
    proposal = _Proposal(proposal_sd, theta.size)
    keep = np.empty((iters - burnin, theta.size))
    accepted = 0
    for it in range(iters):
        theta, ok = _step(kind, theta, data, model, proposal, rng, prior, x_stats, inner_cycles)
        accepted += ok
        if it >= burnin:
            keep[it - burnin] = theta
    return McmcChain(keep, accepted / iters, np.asarray(proposal_sd, dtype=float), kind, iters, burnin,
                     seed, time.perf_counter() - t0)


def write_chain(chain: McmcChain, path) -> None:
    """Samples as CSV (``theta_1..theta_d``) plus a ``.json`` sidecar."""
    d = chain.samples.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"theta_{q + 1}" for q in range(d)])
        for row in chain.samples:
            w.writerow([repr(float(v)) for v in row])
    side = {"acceptance_rate": chain.acceptance_rate, "iters": chain.iters, "burnin": chain.burnin,
            "seed": chain.seed, "wall_seconds": chain.wall_seconds, "kind": chain.kind,
            "proposal_sd": np.asarray(chain.proposal_sd).tolist()}
    with open(str(path) + ".json", "w") as fh:
        json.dump(side, fh, indent=2)

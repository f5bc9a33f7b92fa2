"""Shared contract for exponential-family models with intractable normalizers.

Every model has an unnormalized likelihood ``log h(x | theta) = eta(theta) . S(x)``
so the score of ``h`` is ``J_eta(theta)^T S(x)`` and importance weights between
two parameter values only need the cached sufficient statistics.
"""

from abc import ABC, abstractmethod

import numpy as np


class SimulationError(RuntimeError):
    """A model simulator gave up (e.g. rejection retry cap exceeded)."""


class ExpFamilyModel(ABC):
    """Abstract exponential-family model.

    Subclasses hold everything that is fixed across parameter values
    (lattice shape, covariates, node attributes, dispersion) and expose
    the sufficient statistics, the natural-parameter map and a simulator.
    """

    name = "model"
    param_dim: int
    stat_dim: int

    @abstractmethod
    def suffstats(self, data) -> np.ndarray:
        """Sufficient statistic vector ``S(x)`` of length ``stat_dim``."""

    def natural_params(self, theta) -> np.ndarray:
        return np.asarray(theta, dtype=float).reshape(self.param_dim)

    def natural_jacobian(self, theta) -> np.ndarray:
        return np.eye(self.stat_dim, self.param_dim)

    @abstractmethod
    def simulate(self, theta, m: int, rng) -> np.ndarray:
        """Sufficient statistics of ``m`` draws from ``f(. | theta)``, shape ``(m, stat_dim)``."""

    def auxiliary_from(self, data, theta, cycles: int, rng) -> np.ndarray:
        """Statistics of a short MCMC run at ``theta`` started at ``data``.

        Used by double Metropolis-Hastings. Models without an MCMC sampler
        fall back to an independent draw.
        """
        return self.simulate(theta, 1, rng)[0]

    def check_theta(self, theta) -> None:
        """Raise ValueError if the simulator cannot handle ``theta``."""

    # Derived quantities shared by all models.

    def log_h(self, stats, theta) -> np.ndarray:
        """``eta(theta) . S`` for one statistic vector or a stack of them."""
        return np.asarray(stats, dtype=float) @ self.natural_params(theta)

    def score_h(self, stats, theta) -> np.ndarray:
        """``J_eta(theta)^T S``; rows broadcast over a stack of statistics."""
        return np.asarray(stats, dtype=float) @ self.natural_jacobian(theta)


class FlatPrior:
    """Improper flat prior, optionally restricted to a box.

    The box only matters to the MCMC baselines (proposals outside are
    rejected); the SVGD score contribution is zero everywhere.
    """

    def __init__(self, lower=None, upper=None):
        self.lower = None if lower is None else np.atleast_1d(np.asarray(lower, float))
        self.upper = None if upper is None else np.atleast_1d(np.asarray(upper, float))

    def logpdf(self, theta) -> float:
        theta = np.atleast_1d(theta)
        if self.lower is not None and np.any(theta < self.lower):
            return -np.inf
        if self.upper is not None and np.any(theta > self.upper):
            return -np.inf
        return 0.0

    def grad(self, theta) -> np.ndarray:
        return np.zeros_like(np.atleast_1d(np.asarray(theta, float)))

    def __repr__(self):
        return f"FlatPrior(lower={self.lower}, upper={self.upper})"


class GaussianPrior:
    """Isotropic ``N(0, sigma^2 I)`` prior."""

    def __init__(self, sigma: float = 10.0):
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.sigma = float(sigma)

    def logpdf(self, theta) -> float:
        theta = np.atleast_1d(np.asarray(theta, float))
        return float(-0.5 * theta @ theta / self.sigma**2)

    def grad(self, theta) -> np.ndarray:
        return -np.atleast_1d(np.asarray(theta, float)) / self.sigma**2

    def __repr__(self):
        return f"GaussianPrior(sigma={self.sigma})"


def make_prior(spec):
    """Build a prior from ``None``, a prior object, or a config mapping."""
    if spec is None:
        return FlatPrior()
    if hasattr(spec, "grad"):
        return spec
    kind = spec.get("kind", "flat")
    if kind == "flat":
        return FlatPrior(spec.get("lower"), spec.get("upper"))
    if kind == "gaussian":
        return GaussianPrior(spec.get("sigma", 10.0))
    raise ValueError(f"unknown prior kind {kind!r}")

"""Conway-Maxwell-Poisson regression with known dispersion.

``y_i ~ COMP(eta_i, nu)`` with ``log eta_i = x_i . beta``. The unnormalized
likelihood is ``exp(nu * beta . X^T y - nu * sum(log y_i!))``, so the
statistic vector is ``(X^T y, sum log y_i!)`` and ``eta(beta) = (nu*beta, -nu)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .base import ExpFamilyModel, SimulationError

DEFAULT_MAX_TRIES = 10_000


@dataclass
class CountRegressionData:
    y: np.ndarray
    X: np.ndarray
    nu: float

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        if self.X.shape[0] != self.y.size:
            raise ValueError("X must have one row per count")
        if np.any(self.y < 0):
            raise ValueError("counts must be non-negative")
        if not self.nu > 0:
            raise ValueError("nu must be positive")


def comp_suffstats(y, X) -> np.ndarray:
    y = np.asarray(y)
    if np.any(y < 0):
        raise ValueError("counts must be non-negative")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    # y may be (N,) or a stack (m, N)
    return np.concatenate([y @ X, gammaln(y + 1.0).sum(axis=-1, keepdims=True)], axis=-1)


def comp_sample(eta, nu: float, rng, max_tries: int = DEFAULT_MAX_TRIES) -> np.ndarray:
    """Exact COMP draws by rejection, one per entry of ``eta``.

    For ``nu >= 1`` the envelope is Poisson(eta); for ``nu < 1`` it is a
    geometric distribution on ``{0, 1, ...}``. Both bounds are attained at
    the mode of a Poisson-type term, so acceptance probabilities are <= 1.
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if np.any(eta <= 0) or not nu > 0:
        raise ValueError("COMP needs eta > 0 and nu > 0")
    out = np.empty(eta.shape, dtype=np.int64)
    flat_out = out.reshape(-1)
    mu = eta.reshape(-1)
    pending = np.arange(mu.size)
    if nu >= 1:
        log_mu = np.log(mu)
        mode = np.floor(mu)
        log_bound = (nu - 1.0) * (mode * log_mu - gammaln(mode + 1.0))
    else:
        p = 2.0 * nu / (2.0 * mu * nu + 1.0 + nu)
        log_lam = np.log(mu) - np.log1p(-p) / nu
        mode = np.floor(np.exp(log_lam))
        log_bound = nu * (mode * log_lam - gammaln(mode + 1.0))
    tries = 0
    while pending.size:
        tries += 1
        if tries > max_tries:
            k = pending[0]
            raise SimulationError(
                f"COMP rejection sampler exceeded {max_tries} tries (eta={mu[k]:.6g}, nu={nu:.6g})"
            )
        if nu >= 1:
            y = rng.poisson(mu[pending])
            log_acc = (nu - 1.0) * (y * log_mu[pending] - gammaln(y + 1.0)) - log_bound[pending]
        else:
            y = rng.geometric(p[pending]) - 1
            log_acc = nu * (y * log_lam[pending] - gammaln(y + 1.0)) - log_bound[pending]
        accept = np.log(rng.random(pending.size)) < log_acc
        flat_out[pending[accept]] = y[accept]
        pending = pending[~accept]
    return out


def comp_sample_one(eta: float, nu: float, rng, max_tries: int = DEFAULT_MAX_TRIES) -> int:
    return int(comp_sample(np.array([eta]), nu, rng, max_tries)[0])


def comp_log_weights(eta: float, nu: float, rel_tol: float = 1e-12, max_terms: int = 1_000_000):
    """Truncated log-pmf terms ``nu*(y log eta - log y!)`` for ``y = 0, 1, ...``.

    The series stops once past the mode and the next term is below
    ``rel_tol`` times the running sum.
    """
    log_eta = np.log(eta)
    terms = []
    log_sum = -np.inf
    mode = int(np.floor(eta))
    for y in range(max_terms):
        lt = nu * (y * log_eta - gammaln(y + 1.0))
        if y > mode and lt - log_sum < np.log(rel_tol):
            break
        terms.append(lt)
        log_sum = np.logaddexp(log_sum, lt)
    return np.array(terms), log_sum


def comp_pmf(eta: float, nu: float, rel_tol: float = 1e-12, max_terms: int = 1_000_000) -> np.ndarray:
    """COMP pmf on ``0 .. Y`` from the truncated normalizing series."""
    terms, log_z = comp_log_weights(eta, nu, rel_tol, max_terms)
    return np.exp(terms - log_z)


def comp_simulate(beta, data: CountRegressionData, m: int, rng,
                  max_tries: int = DEFAULT_MAX_TRIES) -> np.ndarray:
    """Statistics of ``m`` replicate response vectors drawn at ``beta``."""
    eta = np.exp(data.X @ np.asarray(beta, dtype=float))
    y = comp_sample(np.broadcast_to(eta, (m, eta.size)), data.nu, rng, max_tries)
    return comp_suffstats(y, data.X)


class COMPModel(ExpFamilyModel):
    """COMP regression with fixed covariates ``X`` and known dispersion ``nu``."""

    name = "comp"

    def __init__(self, X, nu: float, max_tries: int = DEFAULT_MAX_TRIES):
        X = np.asarray(X, dtype=float)
        self.X = X[:, None] if X.ndim == 1 else X
        self.nu = float(nu)
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        self.max_tries = int(max_tries)
        self.param_dim = self.X.shape[1]
        self.stat_dim = self.param_dim + 1

    def _as_y(self, data):
        y = data.y if isinstance(data, CountRegressionData) else data
        return np.asarray(y, dtype=np.int64)

    def suffstats(self, data) -> np.ndarray:
        return comp_suffstats(self._as_y(data), self.X)

    def natural_params(self, theta) -> np.ndarray:
        beta = np.asarray(theta, dtype=float).reshape(self.param_dim)
        return np.append(self.nu * beta, -self.nu)

    def natural_jacobian(self, theta) -> np.ndarray:
        return self.nu * np.vstack([np.eye(self.param_dim), np.zeros((1, self.param_dim))])

    def simulate(self, theta, m: int, rng) -> np.ndarray:
        data = CountRegressionData(np.zeros(self.X.shape[0], dtype=np.int64), self.X, self.nu)
        return comp_simulate(theta, data, m, rng, self.max_tries)

    def simulate_counts(self, theta, rng) -> np.ndarray:
        eta = np.exp(self.X @ np.asarray(theta, dtype=float))
        return comp_sample(eta, self.nu, rng, self.max_tries)


def poisson_regression(X, y, iters: int = 100, tol: float = 1e-10):
    """Poisson GLM (log link) by IRLS; returns ``(beta_hat, covariance)``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.zeros(X.shape[1])
    info = np.eye(X.shape[1])
    for _ in range(iters):
        mu = np.exp(X @ beta)
        info = X.T @ (mu[:, None] * X)
        step = np.linalg.solve(info, X.T @ (y - mu))
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    mu = np.exp(X @ beta)
    info = X.T @ (mu[:, None] * X)
    return beta, np.linalg.inv(info)

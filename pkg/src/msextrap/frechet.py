"""Frechet distribution primitives and quasi-maximum-likelihood fitting.

The three-parameter family used throughout is

    H(x; alpha, mu, sigma) = exp(-((x - mu) / sigma) ** -alpha),  x > mu,

and 0 for x <= mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, FitError

__all__ = [
    "FrechetParams",
    "UNIT",
    "cdf",
    "pdf",
    "logpdf",
    "quantile",
    "sample",
    "quasi_loglik",
    "fit_quasi_ml",
]


@dataclass(frozen=True)
class FrechetParams:
    """Shape ``alpha``, location ``mu`` and scale ``sigma`` of a Frechet law."""

    alpha: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not np.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")

    def standardize(self, x):
        """Map ``x`` to the unit-scale, zero-location variable ``(x - mu) / sigma``."""
        return (np.asarray(x, dtype=float) - self.mu) / self.sigma

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "mu": self.mu, "sigma": self.sigma}


UNIT = FrechetParams()


def _scalar_or_array(out, x):
    return float(out) if np.ndim(x) == 0 else out


def cdf(x, p: FrechetParams = UNIT):
    """Distribution function; exactly 0 at and below ``mu``."""
    z = p.standardize(x)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.where(z > 0, np.exp(-np.power(np.where(z > 0, z, 1.0), -p.alpha)), 0.0)
    return _scalar_or_array(out, x)


def logpdf(x, p: FrechetParams = UNIT):
    z = p.standardize(x)
    zp = np.where(z > 0, z, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        lp = np.log(p.alpha / p.sigma) - (1.0 + p.alpha) * np.log(zp) - np.power(zp, -p.alpha)
    out = np.where(z > 0, lp, -np.inf)
    return _scalar_or_array(out, x)


def pdf(x, p: FrechetParams = UNIT):
    """Density, computed in log space so that it underflows cleanly to 0."""
    with np.errstate(under="ignore"):
        out = np.exp(logpdf(x, p))
    return _scalar_or_array(out, x)


def quantile(prob, p: FrechetParams = UNIT):
    """Inverse of :func:`cdf` on (0, 1)."""
    q = np.asarray(prob, dtype=float)
    if np.any(~((q > 0) & (q < 1))):
        raise DomainError("quantile probabilities must lie strictly inside (0, 1)")
    out = p.mu + p.sigma * np.power(-np.log(q), -1.0 / p.alpha)
    return _scalar_or_array(out, prob)


def sample(p: FrechetParams, rng: np.random.Generator, size=None):
    """Draw by inversion of a uniform variate."""
    u = rng.random(size)
    # rng.random lies in [0, 1); 0 would map to mu exactly
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return quantile(u, p)


def quasi_loglik(data, p: FrechetParams) -> float:
    """Log-likelihood of ``data`` treated as an i.i.d. sample.

    Returns ``-inf`` if any observation lies at or below ``mu``.
    """
    x = np.asarray(data, dtype=float)
    z = (x - p.mu) / p.sigma
    if np.any(z <= 0):
        return -np.inf
    m = x.size
    return float(
        m * np.log(p.alpha / p.sigma)
        - np.sum(np.power(z, -p.alpha))
        - (p.alpha + 1.0) * np.sum(np.log(z))
    )


def _starting_points(x: np.ndarray, eps: float):
    lo = x.min() - eps
    spread = np.ptp(x)
    for c in (0.05, 0.3, 1.0, 3.0, 10.0):
        mu0 = lo - c * spread
        y = np.log(x - mu0)
        sd = y.std(ddof=1)
        alpha0 = np.pi / (sd * np.sqrt(6.0))
        sigma0 = np.median(x - mu0) * np.log(2.0) ** (1.0 / alpha0)
        yield alpha0, mu0, sigma0


def fit_quasi_ml(data, *, n_starts: int = 5, tol: float = 1e-10) -> FrechetParams:
    """Quasi-maximum-likelihood estimate of ``(alpha, mu, sigma)``.

    The observations may be serially dependent; the likelihood is simply the
    product of marginal densities.  ``mu`` is kept below ``min(data) - eps``
    with ``eps = 1e-6 * range(data)``.  A derivative-free Nelder-Mead search is
    started from up to five deterministic moment-based guesses and the best
    local optimum is returned.

    Raises:
        FitError: fewer than 10 distinct values, or no start converges.
    """
    x = np.asarray(data, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise FitError("data contain non-finite values")
    if np.unique(x).size < 10:
        raise FitError("need at least 10 distinct observations for a Frechet fit")

    eps = 1e-6 * np.ptp(x)
    upper = x.min() - eps
    logx_scale = np.log(np.ptp(x))

    def unpack(theta):
        la, ls, nu = theta
        return np.exp(la), upper - np.exp(nu + logx_scale), np.exp(ls)

    def objective(theta):
        a, mu, s = unpack(theta)
        if not (np.isfinite(a) and np.isfinite(s) and np.isfinite(mu)):
            return np.inf
        z = (x - mu) / s
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            ll = x.size * np.log(a / s) - np.sum(z ** -a) - (a + 1.0) * np.sum(np.log(z))
        return -ll if np.isfinite(ll) else np.inf

    best = None
    for k, (a0, mu0, s0) in enumerate(_starting_points(x, eps)):
        if k >= n_starts:
            break
        theta0 = np.array([np.log(a0), np.log(s0), np.log(upper - mu0) - logx_scale])
        res = optimize.minimize(
            objective,
            theta0,
            method="Nelder-Mead",
            options={"xatol": tol, "fatol": tol, "maxiter": 20000, "maxfev": 40000},
        )
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise FitError("quasi-ML optimization failed from every starting point")
    a, mu, s = unpack(best.x)
    return FrechetParams(alpha=float(a), mu=float(mu), sigma=float(s))

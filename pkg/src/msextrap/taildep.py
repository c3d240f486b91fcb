"""Tail dependence functions of Brown-Resnick, Smith and extremal Gaussian vectors.

A tail dependence function ``l`` of an n-variate max-stable vector with
alpha-Frechet margins is a D-norm: ``l(x) = E max_j x_j Z_j`` for a nonnegative
generator ``Z`` with unit means.  For the three models:

* Brown-Resnick / Smith: ``Z_j = exp(Y_j - Var(Y_j) / 2)`` with ``Y`` Gaussian.
* Extremal Gaussian: ``Z_j = sqrt(2 pi) * max(Y_j, 0)`` with ``Y`` a
  standardized Gaussian vector.

Bivariate closed forms are exact; everything else is Monte Carlo and comes
with a standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize
from scipy.stats import norm

from .errors import CalibrationError, DomainError, FactorizationError

__all__ = [
    "ModelKind",
    "ModelSpec",
    "TailDepFn",
    "MCEstimate",
    "EG_THETA_MAX",
    "l_bivariate_hr",
    "l_bivariate_eg",
    "l_mc_log_gaussian",
    "l_mc_eg",
    "extremal_coefficient",
    "calibrate_sigma",
    "pair_variogram",
    "pair_correlation",
    "gaussian_covariance",
    "gaussian_factor",
    "cholesky_jitter",
    "independence",
    "complete_dependence",
    "pair_tdf",
    "generator_tdf",
    "model_tdf",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)
EG_THETA_MAX = 1.0 + 1.0 / math.sqrt(2.0)


class ModelKind(str, Enum):
    BROWN_RESNICK = "br"
    SMITH = "smith"
    EXTREMAL_GAUSSIAN = "eg"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        aliases = {
            "br": cls.BROWN_RESNICK,
            "brown-resnick": cls.BROWN_RESNICK,
            "brownresnick": cls.BROWN_RESNICK,
            "smith": cls.SMITH,
            "eg": cls.EXTREMAL_GAUSSIAN,
            "extremal-gaussian": cls.EXTREMAL_GAUSSIAN,
            "extremalgaussian": cls.EXTREMAL_GAUSSIAN,
            "schlather": cls.EXTREMAL_GAUSSIAN,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise DomainError(f"unknown model kind {value!r}") from None


@dataclass(frozen=True)
class ModelSpec:
    """A stationary max-stable model on a lattice of dimension 1 or 2.

    ``sigma`` is the volatility of the Brownian motion (Brown-Resnick), the
    standard deviation of the storm kernel (Smith, ``Sigma = sigma^2 I``) or
    the correlation length of the exponential covariance (extremal Gaussian).
    """

    kind: ModelKind
    sigma: float
    dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"covariance parameter must be positive, got {self.sigma}")
        if self.dim not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {self.dim}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sigma": self.sigma, "dim": self.dim}


class MCEstimate(NamedTuple):
    value: float
    se: float


@dataclass(frozen=True)
class TailDepFn:
    """Evaluator of a tail dependence function on R^n_+."""

    n: int
    evaluator: Callable[[np.ndarray], float] = field(repr=False)
    kind: str = "explicit"

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DomainError(f"expected a vector of length {self.n}, got shape {x.shape}")
        if np.any(x < 0):
            raise DomainError("tail dependence functions are defined on the nonnegative orthant")
        return float(self.evaluator(x))


# --- closed forms -----------------------------------------------------------


def l_bivariate_hr(x1: float, x2: float, gamma_variogram: float) -> float:
    """Husler-Reiss bivariate tail dependence function.

    ``gamma_variogram`` is the semivariogram ``Var(Y_1 - Y_2) / 2`` of the
    underlying Gaussian process between the two sites.
    """
    if not gamma_variogram > 0:
        raise DomainError("variogram must be positive")
    if x1 < 0 or x2 < 0:
        raise DomainError("arguments must be nonnegative")
    if x1 == 0 or x2 == 0:
        return float(x1 + x2)
    a = math.sqrt(gamma_variogram / 2.0)
    b = math.sqrt(2.0 * gamma_variogram)
    r = math.log(x1 / x2)
    return float(x1 * norm.cdf(a + r / b) + x2 * norm.cdf(a - r / b))


def l_bivariate_eg(x1: float, x2: float, rho: float) -> float:
    """Extremal Gaussian bivariate tail dependence function."""
    if abs(rho) > 1:
        raise DomainError("correlation must lie in [-1, 1]")
    if x1 < 0 or x2 < 0:
        raise DomainError("arguments must be nonnegative")
    disc = max(x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2, 0.0)
    return 0.5 * (x1 + x2 + math.sqrt(disc))


def pair_variogram(spec: ModelSpec, h) -> np.ndarray:
    """Semivariogram of the Gaussian process behind a BR or Smith model at lag ``h``."""
    h = np.abs(np.asarray(h, dtype=float))
    if spec.kind is ModelKind.BROWN_RESNICK:
        return spec.sigma**2 * h / 2.0
    if spec.kind is ModelKind.SMITH:
        return h**2 / (2.0 * spec.sigma**2)
    raise DomainError("variogram is defined for Brown-Resnick and Smith models only")


def pair_correlation(spec: ModelSpec, h) -> np.ndarray:
    """Correlation of the Gaussian process behind an extremal Gaussian model."""
    if spec.kind is not ModelKind.EXTREMAL_GAUSSIAN:
        raise DomainError("correlation function is defined for the extremal Gaussian model only")
    return np.exp(-np.abs(np.asarray(h, dtype=float)) / spec.sigma)


def extremal_coefficient(spec: ModelSpec, h):
    """Pairwise extremal coefficient ``theta(h) = l((1, 1))`` at lag ``h >= 0``."""
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0):
        raise DomainError("lag must be nonnegative")
    s = spec.sigma
    if spec.kind is ModelKind.BROWN_RESNICK:
        out = 2.0 * norm.cdf(s * np.sqrt(h_arr) / 2.0)
    elif spec.kind is ModelKind.SMITH:
        out = 2.0 * norm.cdf(h_arr / (2.0 * s))
    else:
        out = 1.0 + np.sqrt(-np.expm1(-h_arr / s)) / math.sqrt(2.0)
    return float(out) if np.ndim(h) == 0 else out


def calibrate_sigma(kind, theta_target: float, lag: float = 1.0) -> float:
    """Covariance parameter whose extremal coefficient at ``lag`` equals ``theta_target``.

    Bisection in ``log sigma`` over ``(1e-8, 1e3)``; each model's coefficient is
    strictly monotone in ``sigma``.

    Raises:
        CalibrationError: ``theta_target`` outside the attainable range, in
            particular ``theta >= 1 + 1/sqrt(2)`` for the extremal Gaussian model.
    """
    kind = ModelKind.parse(kind)
    if not 1.0 < theta_target < 2.0:
        raise CalibrationError(f"extremal coefficient must lie in (1, 2), got {theta_target}")
    if kind is ModelKind.EXTREMAL_GAUSSIAN and theta_target >= EG_THETA_MAX:
        raise CalibrationError(
            f"extremal Gaussian coefficients lie in (1, {EG_THETA_MAX:.6f}); "
            f"{theta_target} is infeasible"
        )

    def gap(log_s):
        return extremal_coefficient(ModelSpec(kind, math.exp(log_s)), lag) - theta_target

    lo, hi = math.log(1e-8), math.log(1e3)
    if gap(lo) * gap(hi) > 0:
        raise CalibrationError(f"theta={theta_target} not attainable on (1e-8, 1e3)")
    log_s = optimize.bisect(gap, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)
    return math.exp(log_s)


# --- Gaussian building blocks ----------------------------------------------


def cholesky_jitter(cov: np.ndarray, max_escalations: int = 3) -> np.ndarray:
    """Lower Cholesky factor, adding diagonal jitter on failure.

    The jitter starts at ``1e-10 * trace / n`` and grows 100-fold per retry.
    """
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    base = 1e-10 * np.trace(cov) / cov.shape[0]
    eye = np.eye(cov.shape[0])
    for k in range(max_escalations):
        try:
            return np.linalg.cholesky(cov + base * 100.0**k * eye)
        except np.linalg.LinAlgError:
            continue
    raise FactorizationError("covariance matrix is not positive definite, even with jitter")


def _as_sites(sites) -> np.ndarray:
    s = np.asarray(sites, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    return s


def gaussian_covariance(spec: ModelSpec, sites) -> np.ndarray:
    """Covariance of the underlying Gaussian process at ``sites``.

    Brown-Resnick uses Levy's Brownian field ``sigma^2/2 (|s| + |t| - |s - t|)``,
    which for ``d = 1`` and nonnegative sites is ``sigma^2 min(s, t)``.  Smith
    uses the linear field ``Y_t = t' Ytilde`` with ``Ytilde ~ N(0, I / sigma^2)``;
    the extremal Gaussian model uses ``exp(-|s - t| / sigma)``.
    """
    s = _as_sites(sites)
    dist = np.sqrt(((s[:, None, :] - s[None, :, :]) ** 2).sum(-1))
    if spec.kind is ModelKind.BROWN_RESNICK:
        r = np.sqrt((s**2).sum(-1))
        return spec.sigma**2 / 2.0 * (r[:, None] + r[None, :] - dist)
    if spec.kind is ModelKind.SMITH:
        return s @ s.T / spec.sigma**2
    return np.exp(-dist / spec.sigma)


def gaussian_factor(spec: ModelSpec, sites) -> np.ndarray:
    """Matrix ``A`` with ``A @ A.T`` equal to :func:`gaussian_covariance`."""
    if spec.kind is ModelKind.SMITH:
        return _as_sites(sites) / spec.sigma
    return cholesky_jitter(gaussian_covariance(spec, sites))


# --- Monte Carlo ------------------------------------------------------------


def _mc_mean(values_fn, m: int, chunk: int = 20000) -> MCEstimate:
    sums, sqs = [], []
    done = 0
    while done < m:
        k = min(chunk, m - done)
        v = values_fn(k)
        sums.append(float(v.sum()))
        sqs.append(float((v * v).sum()))
        done += k
    mean = math.fsum(sums) / m
    var = max(math.fsum(sqs) / m - mean * mean, 0.0) * m / max(m - 1, 1)
    return MCEstimate(mean, math.sqrt(var / m))


def l_mc_log_gaussian(x, cov, variances, rng: np.random.Generator, m: int = 100_000) -> MCEstimate:
    """Monte Carlo estimate of ``E max_j x_j exp(Y_j - variances_j / 2)``."""
    x = np.asarray(x, dtype=float)
    if m < 1000:
        raise DomainError("use at least 1000 Monte Carlo draws")
    if not np.any(x > 0):
        return MCEstimate(0.0, 0.0)
    chol = cholesky_jitter(cov)
    half_var = 0.5 * np.asarray(variances, dtype=float)

    def draw(k):
        y = rng.standard_normal((k, x.size)) @ chol.T
        return (x * np.exp(y - half_var)).max(axis=1)

    return _mc_mean(draw, m)


def l_mc_eg(x, corr, rng: np.random.Generator, m: int = 100_000) -> MCEstimate:
    """Monte Carlo estimate of ``sqrt(2 pi) E[0 v max_j x_j Y_j]``."""
    x = np.asarray(x, dtype=float)
    if m < 1000:
        raise DomainError("use at least 1000 Monte Carlo draws")
    if not np.any(x > 0):
        return MCEstimate(0.0, 0.0)
    chol = cholesky_jitter(corr)

    def draw(k):
        y = rng.standard_normal((k, x.size)) @ chol.T
        return SQRT_2PI * np.maximum((x * y).max(axis=1), 0.0)

    return _mc_mean(draw, m)


# --- TailDepFn factories ----------------------------------------------------


def independence(n: int) -> TailDepFn:
    return TailDepFn(n, lambda x: float(np.sum(x)), "independent")


def complete_dependence(n: int) -> TailDepFn:
    return TailDepFn(n, lambda x: float(np.max(x)), "complete")


def pair_tdf(spec: ModelSpec, h: float) -> TailDepFn:
    """Exact bivariate tail dependence function of ``(X_t, X_{t+h})``."""
    if h == 0:
        return complete_dependence(2)
    if spec.kind is ModelKind.EXTREMAL_GAUSSIAN:
        rho = float(pair_correlation(spec, h))
        return TailDepFn(2, lambda x: l_bivariate_eg(x[0], x[1], rho), "eg")
    g = float(pair_variogram(spec, h))
    return TailDepFn(2, lambda x: l_bivariate_hr(x[0], x[1], g), spec.kind.value)


def generator_tdf(z: np.ndarray, kind: str = "generator") -> TailDepFn:
    """D-norm ``x -> mean_k max_j x_j z[k, j]`` of a fixed generator sample.

    Reusing one sample makes the evaluator a deterministic, exactly homogeneous
    and monotone function of ``x``.  Columns are rescaled to sample mean 1, so
    ``l(e_j) = 1`` and the norm bounds hold exactly despite MC error (the
    lognormal generators are very heavy tailed at distant sites).
    """
    z = np.asarray(z, dtype=float)
    z = z / z.mean(axis=0)
    return TailDepFn(z.shape[1], lambda x: float((z * x).max(axis=1).mean()), kind)


def model_generator(spec: ModelSpec, sites, rng: np.random.Generator, m: int) -> np.ndarray:
    """``m`` draws of the D-norm generator of the model at ``sites``."""
    a = gaussian_factor(spec, sites)
    y = rng.standard_normal((m, a.shape[1])) @ a.T
    if spec.kind is ModelKind.EXTREMAL_GAUSSIAN:
        return SQRT_2PI * np.maximum(y, 0.0)
    var = (a**2).sum(axis=1)
    return np.exp(y - var / 2.0)


def model_tdf(spec: ModelSpec, sites, rng: np.random.Generator, m: int = 100_000) -> TailDepFn:
    """Monte Carlo tail dependence function of the model at an arbitrary site set."""
    return generator_tdf(model_generator(spec, sites, rng, m), spec.kind.value)

"""Excursion metrics, the Davis-Resnick distance and Wasserstein penalties.

The excursion metric of two variables with common marginal cdf F is
``E[F(Y1 v Y2) - F(Y1 ^ Y2)]``.  For max-linear combinations of a max-stable
vector it has a closed form in terms of the tail dependence function, so the
analytic functions below take ``l``-values (or a :class:`TailDepFn`) instead of
samples.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

from . import frechet
from .errors import DomainError
from .frechet import FrechetParams
from .taildep import TailDepFn

__all__ = [
    "MetricValue",
    "excursion_maxlinear",
    "excursion_target_vs_predictor",
    "excursion_empirical",
    "davis_resnick_from_excursion",
    "excursion_from_davis_resnick",
    "wasserstein1_penalty",
    "wasserstein2_sq_penalty",
    "mse_hat",
]


class MetricValue(NamedTuple):
    value: float
    standard_error: Optional[float] = None


def _weights(w, n) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise DomainError(f"weight vector must have length {n}")
    if np.any(w < 0):
        raise DomainError("weights must be nonnegative")
    return w


def excursion_maxlinear(l: TailDepFn, w1, w2, alpha: float = 1.0) -> MetricValue:
    """Excursion metric between the max-linear combinations ``M(w1, X)`` and ``M(w2, X)``."""
    w1 = _weights(w1, l.n)
    w2 = _weights(w2, l.n)
    if not (np.any(w1 > 0) or np.any(w2 > 0)):
        raise DomainError("at least one weight vector must be nonzero")
    a = l(w1**alpha)
    b = l(w2**alpha)
    c = l(np.maximum(w1, w2) ** alpha)
    return MetricValue(1.0 / (1.0 + a) + 1.0 / (1.0 + b) - 2.0 / (1.0 + c))


def excursion_target_vs_predictor(l_ext: TailDepFn, gamma0: float, w, alpha: float = 1.0) -> MetricValue:
    """Excursion metric between ``gamma0 * X_target`` and ``M(w, X_forecast)``.

    ``l_ext`` is the tail dependence function of the extended vector with the
    target in the first coordinate.
    """
    w = _weights(w, l_ext.n - 1)
    if gamma0 < 0:
        raise DomainError("gamma0 must be nonnegative")
    if gamma0 == 0 and not np.any(w > 0):
        raise DomainError("gamma0 and w cannot both vanish")
    g = gamma0**alpha
    wa = w**alpha
    l_pred = l_ext(np.concatenate([[0.0], wa]))
    l_joint = l_ext(np.concatenate([[g], wa]))
    return MetricValue(1.0 / (g + 1.0) + 1.0 / (l_pred + 1.0) - 2.0 / (l_joint + 1.0))


def excursion_empirical(x0, xhat, marginal: FrechetParams = frechet.UNIT) -> MetricValue:
    """Plug-in excursion metric ``mean(2F(x0 v xhat) - F(xhat)) - 1/2`` with its standard error."""
    x0 = np.asarray(x0, dtype=float).ravel()
    xhat = np.asarray(xhat, dtype=float).ravel()
    if x0.size != xhat.size:
        raise DomainError(f"length mismatch: {x0.size} targets vs {xhat.size} predictions")
    if x0.size == 0:
        raise DomainError("need at least one pair")
    terms = 2.0 * frechet.cdf(np.maximum(x0, xhat), marginal) - frechet.cdf(xhat, marginal) - 0.5
    se = float(terms.std(ddof=1) / math.sqrt(terms.size)) if terms.size > 1 else None
    return MetricValue(float(terms.mean()), se)


def davis_resnick_from_excursion(e: float) -> float:
    if not 0.0 <= e < 1.0:
        raise DomainError(f"excursion metric must lie in [0, 1), got {e}")
    return 4.0 * e / (1.0 - e)


def excursion_from_davis_resnick(d: float) -> float:
    if d < 0:
        raise DomainError(f"distance must be nonnegative, got {d}")
    return d / (4.0 + d)


def wasserstein1_penalty(l_value: float) -> float:
    """1-Wasserstein distance between ``u -> u**l`` and the uniform law on [0, 1]."""
    if l_value < 0:
        raise DomainError("l must be nonnegative")
    if math.isinf(l_value):
        return 0.5
    return 0.5 * abs(l_value - 1.0) / (l_value + 1.0)


def wasserstein2_sq_penalty(l_value: float) -> float:
    """Squared 2-Wasserstein distance between ``u -> u**l`` and the uniform law."""
    if l_value < 0:
        raise DomainError("l must be nonnegative")
    if math.isinf(l_value):
        return 1.0 / 3.0
    return (2.0 / 3.0) * (l_value - 1.0) ** 2 / ((2.0 * l_value + 1.0) * (l_value + 2.0))


def mse_hat(uniforms, M: int = 100) -> float:
    """Mean squared gap between the empirical cdf of ``uniforms`` and the identity on ``h/M``."""
    u = np.sort(np.asarray(uniforms, dtype=float).ravel())
    if u.size == 0:
        raise DomainError("need at least one value")
    if M < 1:
        raise DomainError("grid size must be positive")
    grid = np.arange(1, M + 1) / M
    ecdf = np.searchsorted(u, grid, side="right") / u.size
    return float(np.mean((ecdf - grid) ** 2))

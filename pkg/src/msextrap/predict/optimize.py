"""Empirical target, gradients and the stochastic gradient optimizer."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..metrics import wasserstein2_sq_penalty
from ..taildep import TailDepFn
from . import kernels
from .problem import ForecastProblem, OptimizerConfig, Variant

__all__ = [
    "Weights",
    "OptimResult",
    "max_linear",
    "draw_bootstrap_indices",
    "bootstrap_Y",
    "target_phi",
    "grad_q",
    "grad_phi",
    "sgd_minimize",
    "analytic_psi1",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Weights:
    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float).ravel()
        if np.any(lam < 0) or not np.any(lam > 0) or not np.all(np.isfinite(lam)):
            raise DomainError("weights must be finite, nonnegative and not all zero")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True, eq=False)
class OptimResult:
    weights: Weights
    phi: float
    trace: np.ndarray
    skipped_ties: int = 0

    @property
    def n_iter(self) -> int:
        return int(self.trace.size)


def _lam(lam) -> np.ndarray:
    return Weights(lam.lam if isinstance(lam, Weights) else lam).lam


def max_linear(lam, x) -> float:
    lam = _lam(lam)
    x = np.asarray(x, dtype=float)
    if x.shape != lam.shape:
        raise DomainError(f"weights of length {lam.size} vs sample of length {x.size}")
    return float(np.max(lam * x))


def draw_bootstrap_indices(N: int, rng: np.random.Generator) -> np.ndarray:
    """Resampling indices ``h_1..h_N`` drawn with replacement from ``0..N-1``."""
    if N < 1:
        raise DomainError("need at least one learning window")
    return rng.integers(0, N, size=N).astype(np.int64)


def bootstrap_Y(problem: ForecastProblem, lam, rng=None, hidx=None) -> np.ndarray:
    """``exp(-M(lam, B_j)^-alpha)`` over resampled learning windows ``B_j``.

    Pass either a generator (fresh indices are drawn) or fixed indices ``hidx``.
    """
    lam = _lam(lam)
    W, _, _ = problem.design()
    if hidx is None:
        hidx = draw_bootstrap_indices(problem.N, rng)
    M = (W * lam).max(axis=1)
    with np.errstate(divide="ignore", over="ignore"):
        return np.exp(-np.power(M, -problem.alpha))[hidx]


def _boot_args(problem, rng, hidx):
    boot = problem.variant is Variant.BOOTSTRAP
    if boot and hidx is None:
        if rng is None:
            raise DomainError("the bootstrap variant needs a random generator or indices")
        hidx = draw_bootstrap_indices(problem.N, rng)
    if hidx is None:
        hidx = np.zeros(problem.N, dtype=np.int64)
    return boot, np.asarray(hidx, dtype=np.int64)


def target_phi(lam, problem: ForecastProblem, rng=None, hidx=None) -> float:
    """Penalized empirical excursion target at ``lam``."""
    lam = _lam(lam)
    W, X0, _ = problem.design()
    boot, hidx = _boot_args(problem, rng, hidx)
    return float(kernels.phi(lam, W, X0, problem.alpha, problem.gamma, boot, hidx))


def grad_q(lam, problem: ForecastProblem, j: int, rng=None, hidx=None) -> np.ndarray:
    """Gradient of the ``j``-th summand of the target (0-based ``j``)."""
    lam = _lam(lam)
    W, X0, _ = problem.design()
    if not 0 <= j < problem.N:
        raise DomainError(f"summand index {j} out of range")
    boot, hidx = _boot_args(problem, rng, hidx)
    out = np.empty(problem.n)
    tie = kernels.grad_window(lam, W, X0, problem.alpha, problem.gamma, boot, hidx, j, out)
    if tie:
        log.warning("max tie in learning window %d; returning lowest-index subgradient", j)
    return out


def grad_phi(lam, problem: ForecastProblem, rng=None, hidx=None) -> np.ndarray:
    """Gradient of the full target (almost everywhere)."""
    lam = _lam(lam)
    W, X0, _ = problem.design()
    boot, hidx = _boot_args(problem, rng, hidx)
    return kernels.grad_full(lam, W, X0, problem.alpha, problem.gamma, boot, hidx)


def sgd_minimize(
    problem: ForecastProblem,
    config: OptimizerConfig = OptimizerConfig(),
    lam0=None,
    hidx=None,
) -> OptimResult:
    """Minimize the empirical target by stochastic gradient steps.

    One learning window is drawn per step.  The full target is evaluated after
    every step so the best iterate seen is returned; the run stops after
    ``config.patience`` steps without improvement or ``config.max_iters`` steps.
    Draws that hit an exact max tie are skipped.  With ``config.restarts > 0``
    further runs start from random points and the best result is kept.
    """
    rng = np.random.default_rng(config.seed)
    W, X0, _ = problem.design()
    boot, hidx = _boot_args(problem, rng, hidx)
    starts = [np.ones(problem.n) if lam0 is None else _lam(lam0).copy()]
    # extra starts: wide log-normal spread so that near-boundary basins get visited
    starts += [np.exp(2.0 * rng.standard_normal(problem.n)) for _ in range(config.restarts)]
    best = None
    for start in starts:
        js = rng.integers(0, problem.N, size=config.max_iters).astype(np.int64)
        lam, val, trace, skipped = kernels.descend(
            start, W, X0, float(problem.alpha), float(problem.gamma), boot, hidx, js,
            config.method == "adam", float(config.eta), int(config.patience),
            bool(config.reparametrize_log), config.beta1, config.beta2, config.eps,
        )
        if skipped:
            log.info("skipped %d tied gradient draws", skipped)
        if best is None or val < best.phi:
            best = OptimResult(Weights(lam), float(val), trace, int(skipped))
    return best


def analytic_psi1(l_ext: TailDepFn, w, gamma: float) -> float:
    """Population target in the weights ``w = lam**alpha``.

    ``l_ext`` is the tail dependence function of ``(X_target, X_forecast...)``.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (l_ext.n - 1,) or np.any(w < 0):
        raise DomainError("w must be a nonnegative vector matching the forecast sample")
    l0 = l_ext(np.concatenate([[0.0], w]))
    l1 = l_ext(np.concatenate([[1.0], w]))
    return 1.0 / (l0 + 1.0) - 2.0 / (l1 + 1.0) + gamma * wasserstein2_sq_penalty(l0)

"""Multi-step forecasts along a series and extrapolation of square fields."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ProblemError
from ..simulate import GridSpec, Path
from .optimize import OptimResult, draw_bootstrap_indices, sgd_minimize
from .problem import ForecastProblem, OptimizerConfig, Variant, build_learning_samples

__all__ = [
    "StepForecast",
    "forecast_path",
    "forecast_steps",
    "extension_sites",
    "nearest_sites",
    "learning_translations",
    "forecast_field_2d",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StepForecast:
    step: int
    prediction: float
    result: OptimResult


def forecast_steps(
    series: Path,
    L: int,
    n: int,
    N: int,
    gamma: float,
    alpha: float = 1.0,
    config: OptimizerConfig = OptimizerConfig(),
    *,
    holdout: bool = True,
    variant: Variant = Variant.NON_BOOTSTRAP,
) -> list[StepForecast]:
    """Direct multi-step forecasts: one optimization per step, same forecast window.

    Bootstrap resampling indices are drawn once from ``config.seed`` and shared
    by all steps.
    """
    out = []
    hidx = None
    if variant is Variant.BOOTSTRAP:
        hidx = draw_bootstrap_indices(N, np.random.default_rng([config.seed, 1]))
    for s in range(1, L + 1):
        prob = build_learning_samples(
            series, n, L, N, step=s, holdout=holdout, alpha=alpha, gamma=gamma, variant=variant
        )
        res = sgd_minimize(prob, config, hidx=hidx)
        _, _, xf = prob.design()
        out.append(StepForecast(s, float(np.max(res.weights.lam * xf)), res))
    return out


def forecast_path(series: Path, L: int, n: int, N: int, gamma: float, alpha: float = 1.0,
                  config: OptimizerConfig = OptimizerConfig(), **kw) -> np.ndarray:
    """Predictions for the ``L`` steps after the forecast window."""
    if L == 0:
        return np.empty(0)
    return np.array([f.prediction for f in forecast_steps(series, L, n, N, gamma, alpha, config, **kw)])


# --- 2D ----------------------------------------------------------------------


def extension_sites(n: int, m: int) -> np.ndarray:
    """Sites of ``{1..n+m}^2`` outside the observed ``{1..n}^2``, row-major."""
    if m < 1:
        raise DomainError("horizon must be at least 1")
    out = [(i, j) for i in range(1, n + m + 1) for j in range(1, n + m + 1) if i > n or j > n]
    return np.array(out, dtype=np.int64)


def nearest_sites(observed: np.ndarray, target, k: int) -> np.ndarray:
    """``k`` observed sites closest to ``target``.

    Ties in distance are ordered by the polar angle (in ``[0, 2 pi)``) of the
    vector from the target to the site, then lexicographically.
    """
    obs = np.asarray(observed, dtype=np.int64)
    v = obs - np.asarray(target, dtype=np.int64)
    d2 = (v**2).sum(axis=1)  # exact integer distances, no float ties
    ang = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2.0 * math.pi)
    order = np.lexsort((obs[:, 1], obs[:, 0], ang, d2))
    return obs[order[:k]]


def learning_translations(n: int, fsites: np.ndarray, target, N: int) -> np.ndarray:
    """``N`` translations keeping the configuration inside the ``n x n`` grid.

    Admissible translations keep all translated forecast sites and the
    translated target inside ``{1..n}^2`` and the translated forecast sites
    disjoint from the forecast sites.  ``N`` of them are picked evenly spaced
    from the row-major list; translated windows may overlap each other.
    """
    cfg = np.vstack([fsites, np.asarray(target)[None, :]])
    lo = 1 - cfg.min(axis=0)
    hi = n - cfg.max(axis=0)
    fset = {tuple(s) for s in fsites.tolist()}
    cands = []
    for a in range(lo[0], hi[0] + 1):
        for b in range(lo[1], hi[1] + 1):
            k = np.array([a, b])
            if not fset.isdisjoint(map(tuple, (fsites + k).tolist())):
                continue
            cands.append((a, b))
    if len(cands) < N:
        raise ProblemError(
            f"only {len(cands)} admissible learning configurations fit the grid, {N} requested"
        )
    pick = np.unique(np.round(np.linspace(0, len(cands) - 1, N)).astype(int))
    return np.array([cands[i] for i in pick], dtype=np.int64)


def forecast_field_2d(
    field: Path,
    m: int,
    gamma: float,
    alpha: float = 1.0,
    config: OptimizerConfig = OptimizerConfig(),
    N: int = 100,
) -> Path:
    """Extend an observed ``n x n`` field to ``(n+m) x (n+m)``.

    Each new site is predicted from its ``m+1`` nearest observed sites.
    """
    n = field.grid.side()
    if m < 1:
        raise DomainError("horizon must be at least 1")
    expected = GridSpec.square(n).sites
    if not np.array_equal(field.grid.sites, expected):
        raise DomainError("field must live on the row-major grid {1..n}^2")
    observed = field.grid.sites
    values = {tuple(s): v for s, v in zip(observed.tolist(), field.values)}
    targets = extension_sites(n, m)
    for t in targets:
        fs = nearest_sites(observed, t, m + 1)
        shifts = learning_translations(n, fs, t, N)
        prob = ForecastProblem(field, fs, t, shifts, alpha=alpha, gamma=gamma)
        res = sgd_minimize(prob, config)
        _, _, xf = prob.design()
        values[tuple(t.tolist())] = float(np.max(res.weights.lam * xf))
    big = GridSpec.square(n + m)
    return Path(big, np.array([values[tuple(s)] for s in big.sites.tolist()]))

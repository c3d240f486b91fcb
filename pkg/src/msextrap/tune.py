"""Choice of the penalty weight by trading excursion metric against law preservation.

For every candidate weight the predictor is refitted on ``K`` simulated
series; the empirical excursion metric and the uniformity MSE of
``H(prediction)`` are min-max normalized and the weight minimizing the larger
of the two normalized values wins.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, TuningError
from .metrics import excursion_empirical, mse_hat
from .predict.optimize import sgd_minimize
from .predict.problem import OptimizerConfig, build_learning_samples
from .simulate import GridSpec, Path, simulate_max_stable
from .taildep import ModelSpec

__all__ = ["GammaSweep", "normalize", "simulate_replications", "sweep_gamma", "tune_gamma"]

DEFAULT_GRID = tuple(float(g) for g in range(21))


def normalize(values) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    lo, hi = x.min(), x.max()
    if not hi > lo:
        raise DomainError("cannot normalize a constant vector")
    return (x - lo) / (hi - lo)


@dataclass(frozen=True, eq=False)
class GammaSweep:
    gamma_grid: np.ndarray
    K: int
    excursion: np.ndarray
    excursion_se: np.ndarray
    mse: np.ndarray
    excursion_norm: np.ndarray
    mse_norm: np.ndarray
    gamma_opt: float

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gamma", "excursion", "mse", "excursion_norm", "mse_norm"])
            for row in zip(self.gamma_grid, self.excursion, self.mse, self.excursion_norm, self.mse_norm):
                w.writerow([repr(float(v)) for v in row])


def simulate_replications(spec: ModelSpec, K: int, length: int, rng: np.random.Generator) -> list[Path]:
    grid = GridSpec.line(length)
    return [simulate_max_stable(spec, grid, rng) for _ in range(K)]


def _predict_one(series: Path, gamma: float, n: int, N: int, config: OptimizerConfig):
    prob = build_learning_samples(series, n, 1, N, step=1, gamma=gamma)
    res = sgd_minimize(prob, config)
    _, _, xf = prob.design()
    return float(np.max(res.weights.lam * xf)), float(series.values[-1])


def sweep_gamma(
    series: list[Path],
    gamma_grid=DEFAULT_GRID,
    *,
    n: int = 2,
    N: int = 100,
    M: int = 100,
    config: OptimizerConfig = OptimizerConfig(),
    threads: int = 1,
) -> GammaSweep:
    """Evaluate the trade-off curves on fixed series (one-step-ahead, last value held out)."""
    grid = np.asarray(sorted(float(g) for g in gamma_grid))
    if grid.size == 0:
        raise DomainError("gamma grid is empty")
    if np.any(grid < 0):
        raise DomainError("gamma values must be nonnegative")
    K = len(series)
    jobs = [(g, k) for g in grid for k in range(K)]

    def run(job):
        g, k = job
        return _predict_one(series[k], g, n, N, replace(config, seed=config.seed + k))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    pred = np.array([r[0] for r in results]).reshape(grid.size, K)
    truth = np.array([r[1] for r in results]).reshape(grid.size, K)
    exc = np.empty(grid.size)
    se = np.empty(grid.size)
    mse = np.empty(grid.size)
    for i in range(grid.size):
        e = excursion_empirical(truth[i], pred[i])
        exc[i] = e.value
        se[i] = e.standard_error if e.standard_error is not None else np.nan
        mse[i] = mse_hat(np.exp(-1.0 / pred[i]), M)
    try:
        en, mn = normalize(exc), normalize(mse)
    except DomainError as err:
        raise TuningError(f"degenerate trade-off curve: {err}") from err
    score = np.maximum(en, mn)
    gopt = float(grid[int(np.argmin(score))])  # argmin returns the first, i.e. smallest, gamma
    return GammaSweep(grid, K, exc, se, mse, en, mn, gopt)


def tune_gamma(
    spec: ModelSpec,
    gamma_grid=DEFAULT_GRID,
    K: int = 1000,
    rng: np.random.Generator | None = None,
    *,
    n: int = 2,
    N: int = 100,
    M: int = 100,
    config: OptimizerConfig = OptimizerConfig(),
    threads: int = 1,
) -> GammaSweep:
    """Simulate ``K`` series of length ``N*n + n + 1`` once and sweep the penalty grid on them."""
    if K < 2:
        raise DomainError("need at least two replications")
    rng = np.random.default_rng() if rng is None else rng
    series = simulate_replications(spec, K, N * n + n + 1, rng)
    return sweep_gamma(series, gamma_grid, n=n, N=N, M=M, config=config, threads=threads)

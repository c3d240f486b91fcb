"""Forecast problems: forecast window, target, learning shifts and penalty."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from ..errors import DomainError, ProblemError
from ..simulate import GridSpec, Path, series_length_for

__all__ = [
    "Variant",
    "OptimizerConfig",
    "ForecastProblem",
    "build_learning_samples",
]


class Variant(str, Enum):
    NON_BOOTSTRAP = "non-bootstrap"
    BOOTSTRAP = "bootstrap"


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "adam"
    eta: float = 0.1
    patience: int = 200
    max_iters: int = 20_000
    reparametrize_log: bool = True
    seed: int = 0
    restarts: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.method not in ("adam", "classic-sgd"):
            raise DomainError(f"unknown optimizer method {self.method!r}")
        if not self.eta > 0:
            raise DomainError("step size must be positive")
        if self.patience < 1 or self.max_iters < 1:
            raise DomainError("patience and max_iters must be at least 1")
        if self.restarts < 0:
            raise DomainError("restarts must be nonnegative")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True, eq=False)
class ForecastProblem:
    """Everything needed to evaluate the empirical target for one prediction.

    Sites are integer coordinate rows of shape ``(., d)``; each shift is a
    translation vector, the ``j``-th learning window being
    ``forecast_sites + shifts[j]`` with target ``target + shifts[j]``.
    """

    observations: Path
    forecast_sites: np.ndarray
    target: np.ndarray
    shifts: np.ndarray
    alpha: float = 1.0
    gamma: float = 0.0
    variant: Variant = Variant.NON_BOOTSTRAP
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        d = self.observations.grid.dim
        fs = np.asarray(self.forecast_sites, dtype=np.int64).reshape(-1, d)
        t0 = np.asarray(self.target, dtype=np.int64).reshape(d)
        sh = np.asarray(self.shifts, dtype=np.int64).reshape(-1, d)
        object.__setattr__(self, "forecast_sites", fs)
        object.__setattr__(self, "target", t0)
        object.__setattr__(self, "shifts", sh)
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.alpha > 0:
            raise ProblemError("alpha must be positive")
        if self.gamma < 0:
            raise ProblemError("gamma must be nonnegative")
        if fs.shape[0] == 0 or sh.shape[0] == 0:
            raise ProblemError("need at least one forecast site and one shift")
        if any((t0 == s).all() for s in fs):
            raise ProblemError("target must not belong to the forecast sample")
        index = {tuple(s): k for k, s in enumerate(self.observations.grid.sites.tolist())}
        object.__setattr__(self, "_index", index)
        fset = {tuple(s) for s in fs.tolist()}
        for k in sh:
            win = fs + k
            for s in win.tolist():
                if tuple(s) not in index:
                    raise ProblemError(f"learning window for shift {k.tolist()} leaves the observed sites")
                if tuple(s) in fset:
                    raise ProblemError(f"learning window for shift {k.tolist()} overlaps the forecast sample")
            if tuple((t0 + k).tolist()) not in index:
                raise ProblemError(f"learning target for shift {k.tolist()} is not observed")
        for s in fs.tolist():
            if tuple(s) not in index:
                raise ProblemError(f"forecast site {s} is not observed")

    @property
    def n(self) -> int:
        return self.forecast_sites.shape[0]

    @property
    def N(self) -> int:
        return self.shifts.shape[0]

    def _values_at(self, sites: np.ndarray) -> np.ndarray:
        idx = [self._index[tuple(s)] for s in sites.tolist()]
        return self.observations.values[idx]

    def design(self):
        """Return ``(W, X0, xf)``: learning windows, learning targets, forecast sample."""
        W = np.stack([self._values_at(self.forecast_sites + k) for k in self.shifts])
        X0 = self._values_at(self.target[None, :] + self.shifts)
        xf = self._values_at(self.forecast_sites)
        return np.ascontiguousarray(W, dtype=float), X0.astype(float), xf.astype(float)

    def with_(self, **changes) -> "ForecastProblem":
        changes.setdefault("_index", None)
        return replace(self, **changes)

    def to_dict(self, optimizer: OptimizerConfig | None = None) -> dict:
        out = {
            "grid_sites": self.observations.grid.sites.tolist(),
            "values": self.observations.values.tolist(),
            "forecast_sites": self.forecast_sites.tolist(),
            "target": self.target.tolist(),
            "shifts": self.shifts.tolist(),
            "alpha": self.alpha,
            "gamma": self.gamma,
            "variant": self.variant.value,
        }
        if optimizer is not None:
            out["optimizer"] = optimizer.to_dict()
        return out

    def to_json(self, optimizer: OptimizerConfig | None = None) -> str:
        return json.dumps(self.to_dict(optimizer))

    @classmethod
    def from_dict(cls, doc: dict):
        """Inverse of :meth:`to_dict`; returns ``(problem, optimizer_or_None)``."""
        path = Path(GridSpec(np.asarray(doc["grid_sites"])), np.asarray(doc["values"]))
        prob = cls(
            path,
            doc["forecast_sites"],
            doc["target"],
            doc["shifts"],
            alpha=float(doc.get("alpha", 1.0)),
            gamma=float(doc.get("gamma", 0.0)),
            variant=doc.get("variant", Variant.NON_BOOTSTRAP.value),
        )
        opt = OptimizerConfig(**doc["optimizer"]) if "optimizer" in doc else None
        return prob, opt

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


def build_learning_samples(
    series: Path,
    n: int,
    L: int,
    N: int,
    *,
    step: int = 1,
    holdout: bool = True,
    alpha: float = 1.0,
    gamma: float = 0.0,
    variant: Variant = Variant.NON_BOOTSTRAP,
) -> ForecastProblem:
    """Forecast problem for predicting ``step`` positions past the forecast window.

    With ``holdout`` the last ``L`` values are reserved as ground truth and the
    forecast window is the ``n`` values just before them; otherwise the
    forecast window is the last ``n`` values.  The learning windows are the
    ``N`` non-overlapping blocks of length ``n`` directly preceding it.
    """
    if series.grid.dim != 1:
        raise ProblemError("learning samples along a series need a 1D path")
    sites = series.grid.sites[:, 0]
    if sites.size > 1 and np.any(np.diff(sites) != 1):
        raise ProblemError("series sites must be consecutive integers")
    if not 1 <= step <= n:
        raise ProblemError(f"step must lie in 1..n={n}, got {step}")
    need = series_length_for(L if holdout else 0, n, N)
    if sites.size < need:
        raise ProblemError(f"series has {sites.size} values but N*n + n + L = {need} are required")
    end = sites.size - (L if holdout else 0)  # one past the forecast window
    fsites = sites[end - n : end]
    target = fsites[-1] + step
    shifts = -n * np.arange(1, N + 1)
    return ForecastProblem(series, fsites, [target], shifts, alpha=alpha, gamma=gamma, variant=variant)

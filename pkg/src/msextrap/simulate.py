"""Exact simulation of max-stable processes on 1D index sets and 2D lattices.

The sampler is the extremal-functions method: sites are swept in order and at
each site a Poisson stream of spectral functions, normalized to equal 1 at
that site, is generated until the stream level drops below the current field
value.  Functions already dominated at an earlier site are discarded.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Callable, Union

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError
from .taildep import ModelKind, ModelSpec, cholesky_jitter, gaussian_covariance

__all__ = [
    "GridSpec",
    "Path",
    "simulate_gaussian",
    "simulate_max_stable",
    "series_length_for",
    "brownian_covariance",
    "ou_covariance",
    "theta_hat",
]


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Ordered set of integer sites; ``sites`` has shape ``(L, d)``."""

    sites: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sites)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] == 0:
            raise DomainError("grid needs a nonempty (L, d) array of sites")
        if s.shape[1] not in (1, 2):
            raise DomainError("only 1D and 2D grids are supported")
        if np.unique(s, axis=0).shape[0] != s.shape[0]:
            raise DomainError("grid sites must be distinct")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "sites", s)

    @classmethod
    def line(cls, length: int, start: int = 1) -> "GridSpec":
        if length < 1:
            raise DomainError("length must be positive")
        return cls(np.arange(start, start + length))

    @classmethod
    def square(cls, n: int, start: int = 1) -> "GridSpec":
        """``n x n`` lattice in row-major order, site ``(i, j)`` at position ``(i-1)*n + (j-1)``."""
        if n < 1:
            raise DomainError("side length must be positive")
        i, j = np.meshgrid(np.arange(start, start + n), np.arange(start, start + n), indexing="ij")
        return cls(np.column_stack([i.ravel(), j.ravel()]))

    @property
    def dim(self) -> int:
        return self.sites.shape[1]

    def __len__(self) -> int:
        return self.sites.shape[0]

    def side(self) -> int:
        """Side length of a square 2D grid."""
        n = int(round(math.sqrt(len(self))))
        if self.dim != 2 or n * n != len(self):
            raise DomainError("not a square 2D grid")
        return n


@dataclass(frozen=True, eq=False)
class Path:
    """A realization: one value per grid site, in grid order."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != len(self.grid):
            raise DomainError(f"{v.size} values for {len(self.grid)} sites")
        object.__setattr__(self, "values", v)

    def as_matrix(self) -> np.ndarray:
        n = self.grid.side()
        return self.values.reshape(n, n)

    def to_csv(self, path) -> None:
        header = ["site_index"] if self.grid.dim == 1 else ["site_index", "site_index2"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header + ["value"])
            for site, val in zip(self.grid.sites, self.values):
                w.writerow([*(int(s) for s in site), repr(float(val))])

    def to_json_matrix(self, path) -> None:
        FsPath(path).write_text(json.dumps(self.as_matrix().tolist()))

    @classmethod
    def from_csv(cls, path) -> "Path":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][-1] != "value" or not rows[0][0].startswith("site_index"):
            raise DomainError(f"{path}: expected header site_index[,site_index2],value")
        d = len(rows[0]) - 1
        body = [r for r in rows[1:] if r]
        sites = np.array([[int(c) for c in r[:d]] for r in body])
        vals = np.array([float(r[d]) for r in body])
        return cls(GridSpec(sites), vals)


def series_length_for(L: int, n: int, N: int) -> int:
    """Series length needed for ``N`` learning windows of size ``n`` and ``L`` held-out steps."""
    if L < 0 or n < 1 or N < 1:
        raise DomainError("need L >= 0 and n, N >= 1")
    return N * n + n + L


# --- Gaussian fields ---------------------------------------------------------

Covariance = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def brownian_covariance(sigma: float):
    """``sigma^2 min(s, t)`` for 1D sites."""
    return lambda s, t: sigma**2 * np.minimum(s[..., 0], t[..., 0])


def ou_covariance(sigma: float):
    """``exp(-|s - t| / sigma)``."""
    return lambda s, t: np.exp(-np.sqrt(((s - t) ** 2).sum(-1)) / sigma)


def _cov_matrix(grid: GridSpec, covariance: Covariance) -> np.ndarray:
    if callable(covariance):
        s = grid.sites.astype(float)
        return np.asarray(covariance(s[:, None, :], s[None, :, :]), dtype=float)
    c = np.asarray(covariance, dtype=float)
    if c.shape != (len(grid), len(grid)):
        raise DomainError("covariance matrix does not match the grid")
    return c


def simulate_gaussian(grid: GridSpec, covariance: Covariance, rng: np.random.Generator, size=None) -> np.ndarray:
    """Centered Gaussian draw(s) at the grid sites.

    ``covariance`` is either an ``(L, L)`` matrix or a function of two
    broadcastable site arrays.  Returns shape ``(L,)`` or ``(size, L)``.
    """
    chol = cholesky_jitter(_cov_matrix(grid, covariance))
    k = 1 if size is None else int(size)
    out = rng.standard_normal((k, len(grid))) @ chol.T
    return out[0] if size is None else out


# --- spectral functions ------------------------------------------------------


class _Spectral:
    """Draws spectral functions normalized to 1 at a given site."""

    def __init__(self, spec: ModelSpec, grid: GridSpec):
        self.spec = spec
        self.sites = grid.sites.astype(float)
        self.L = len(grid)
        self.mode = "chol"
        one_d = grid.dim == 1
        order_ok = one_d and np.all(np.diff(self.sites[:, 0]) > 0)
        if spec.kind is ModelKind.SMITH:
            self.mode = "smith"
        elif spec.kind is ModelKind.BROWN_RESNICK and order_ok:
            self.mode = "bm"
            self.step_sd = spec.sigma * np.sqrt(np.diff(self.sites[:, 0]))
        elif spec.kind is ModelKind.EXTREMAL_GAUSSIAN and order_ok:
            gaps = np.diff(self.sites[:, 0])
            if np.all(gaps == gaps[0]):
                self.mode = "ar1"
                self.r = math.exp(-gaps[0] / spec.sigma)
                self.innov = math.sqrt(1.0 - self.r**2)
        if self.mode == "chol":
            self.cov = gaussian_covariance(spec, self.sites)
            self.chol = cholesky_jitter(self.cov)

    def draw(self, k: int, rng: np.random.Generator) -> np.ndarray:
        if self.spec.kind is ModelKind.EXTREMAL_GAUSSIAN:
            return self._draw_eg(k, rng)
        return self._draw_lognormal(k, rng)

    def _draw_lognormal(self, k, rng):
        x0 = self.sites[k]
        if self.mode == "smith":
            delta = self.sites - x0
            g = rng.standard_normal(delta.shape[1]) / self.spec.sigma
            d = delta @ g
            var = (delta**2).sum(-1) / self.spec.sigma**2
        elif self.mode == "bm":
            steps = rng.standard_normal(self.L - 1) * self.step_sd
            d = np.empty(self.L)
            d[k] = 0.0
            d[k + 1 :] = np.cumsum(steps[k:])
            d[:k] = -np.cumsum(steps[:k][::-1])[::-1]
            var = self.spec.sigma**2 * np.abs(self.sites[:, 0] - x0[0])
        else:
            w = self.chol @ rng.standard_normal(self.L)
            d = w - w[k]
            c = self.cov
            var = np.diag(c) + c[k, k] - 2.0 * c[:, k]
        return np.exp(d - 0.5 * var)

    def _draw_eg(self, k, rng):
        if self.mode == "ar1":
            e = rng.standard_normal(self.L)
            e[1:] *= self.innov
            w = lfilter([1.0], [1.0, -self.r], e)
            rho = self.r ** np.abs(np.arange(self.L) - k)
        else:
            w = self.chol @ rng.standard_normal(self.L)
            rho = self.cov[:, k]
        radius = math.sqrt(2.0 * rng.standard_exponential())
        y = np.maximum(w - rho * w[k] + rho * radius, 0.0) / radius
        y[k] = 1.0
        return y


def simulate_max_stable(spec: ModelSpec, grid: GridSpec, rng: np.random.Generator) -> Path:
    """One exact draw of the max-stable field with unit Frechet margins on ``grid``."""
    if spec.dim != grid.dim:
        raise DomainError(f"model dimension {spec.dim} does not match grid dimension {grid.dim}")
    if spec.kind is ModelKind.BROWN_RESNICK and np.any(np.all(grid.sites == 0, axis=1)):
        raise DomainError("the Brownian field vanishes at the origin; use sites away from 0")
    spectral = _Spectral(spec, grid)
    z = np.zeros(len(grid))
    for k in range(len(grid)):
        level = rng.standard_exponential()
        zeta = 1.0 / level
        while zeta > z[k]:
            y = zeta * spectral.draw(k, rng)
            # strict: a function tying an earlier value counts as dominated
            if k == 0 or np.all(y[:k] < z[:k]):
                np.maximum(z, y, out=z)
            level += rng.standard_exponential()
            zeta = 1.0 / level
    return Path(grid, z)


def theta_hat(x1, x2) -> float:
    """Extremal coefficient estimate from paired unit-Frechet samples.

    Uses the F-madogram ``E = mean |F(x1) - F(x2)|`` and ``theta = 2/(1 - E) - 1``.
    """
    u1 = np.exp(-1.0 / np.asarray(x1, dtype=float))
    u2 = np.exp(-1.0 / np.asarray(x2, dtype=float))
    e = float(np.mean(np.abs(u1 - u2)))
    return 2.0 / (1.0 - e) - 1.0

"""Annual rainfall maxima: ingestion, imputation and the forecast pipeline."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .. import frechet
from ..errors import IngestionError, ProblemError
from ..frechet import FrechetParams
from ..predict.forecast import forecast_steps
from ..predict.problem import OptimizerConfig, Variant
from ..simulate import GridSpec, Path, series_length_for

__all__ = [
    "RainfallRecord",
    "read_rainfall_csv",
    "ingest_rainfall",
    "RainfallConfig",
    "RainfallForecast",
    "rainfall_forecast",
]


@dataclass(frozen=True)
class RainfallRecord:
    year: int
    station: str
    annual_max_daily: Optional[float]


def read_rainfall_csv(path) -> list[RainfallRecord]:
    """Parse ``year,station,value`` rows; an empty value means missing.

    Several rows for one station-year are reduced to their maximum, so daily
    totals can be fed in directly.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["year", "station", "value"]:
            raise IngestionError(f"{path}: header must be year,station,value")
        best: dict = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise IngestionError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                year = int(row[0])
                val = float(row[2]) if row[2].strip() else None
            except ValueError as err:
                raise IngestionError(f"{path}:{lineno}: {err}") from None
            if val is not None and (not math.isfinite(val) or val < 0):
                raise IngestionError(f"{path}:{lineno}: rainfall must be a nonnegative number")
            key = (year, row[1].strip())
            prev = best.get(key)
            if prev is None or (val is not None and val > prev):
                best[key] = val
    return [RainfallRecord(y, s, v) for (y, s), v in sorted(best.items())]


def ingest_rainfall(sources, primary: str) -> list[RainfallRecord]:
    """Complete annual series for ``primary`` over the contiguous span of years seen.

    ``sources`` are CSV paths or already parsed records.  Missing primary values
    are replaced by the mean over the other stations reporting that year.
    """
    records: list[RainfallRecord] = []
    for src in sources:
        if isinstance(src, RainfallRecord):
            records.append(src)
        else:
            records.extend(read_rainfall_csv(src))
    by_year: dict = defaultdict(dict)
    for r in records:
        if r.annual_max_daily is not None:
            cur = by_year[r.year].get(r.station)
            by_year[r.year][r.station] = r.annual_max_daily if cur is None else max(cur, r.annual_max_daily)
        else:
            by_year[r.year].setdefault(r.station, None)
    if not any(r.station == primary for r in records):
        raise IngestionError(f"primary station {primary!r} not found")
    years = range(min(by_year), max(by_year) + 1)
    out, missing = [], []
    for y in years:
        vals = by_year.get(y, {})
        v = vals.get(primary)
        if v is None:
            others = [x for s, x in vals.items() if s != primary and x is not None]
            if not others:
                missing.append(y)
                continue
            v = float(np.mean(others))
        out.append(RainfallRecord(y, primary, float(v)))
    if missing:
        raise IngestionError(f"no station reports a value for year(s) {missing}")
    return out


@dataclass(frozen=True)
class RainfallConfig:
    n: int = 4
    N: int = 35
    L: int = 3
    gamma: float = 2.0
    n_bootstrap: int = 100
    fit_on: str = "train"  # or "all"
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)


@dataclass(frozen=True, eq=False)
class RainfallForecast:
    params: FrechetParams
    years: np.ndarray
    predictions: np.ndarray
    envelope_min: np.ndarray
    envelope_max: np.ndarray
    truth: Optional[np.ndarray]


def rainfall_forecast(values, years=None, config: RainfallConfig = RainfallConfig()) -> RainfallForecast:
    """Point forecast plus a bootstrap min/max envelope for the last ``L`` years.

    The shifted Frechet marginal is fitted by quasi-ML, the data are mapped to
    ``(x - mu) / sigma`` (unit scale, shape ``alpha``), forecast there and
    mapped back.
    """
    x = np.asarray(values, dtype=float)
    c = config
    need = series_length_for(c.L, c.n, c.N)
    if x.size < need:
        raise ProblemError(f"series has {x.size} values, {need} needed for n={c.n}, N={c.N}, L={c.L}")
    if c.fit_on not in ("train", "all"):
        raise ProblemError("fit_on must be 'train' or 'all'")
    x = x[-need:]
    years = np.arange(need) if years is None else np.asarray(years)[-need:]
    fit_data = x[: need - c.L] if c.fit_on == "train" else x
    params = frechet.fit_quasi_ml(fit_data)
    # only the observed part enters the problem; held-out years are truth only
    path = Path(GridSpec.line(need - c.L), params.standardize(x[: need - c.L]))
    if np.any(path.values <= 0):
        raise ProblemError("observations fall below the fitted location")
    kw = dict(holdout=False)

    point = forecast_steps(path, c.L, c.n, c.N, c.gamma, params.alpha, c.optimizer, **kw)
    pred = np.array([p.prediction for p in point])
    boots = np.empty((c.n_bootstrap, c.L))
    for b in range(c.n_bootstrap):
        cfg = OptimizerConfig(**{**c.optimizer.to_dict(), "seed": c.optimizer.seed + 1 + b})
        runs = forecast_steps(path, c.L, c.n, c.N, c.gamma, params.alpha, cfg, variant=Variant.BOOTSTRAP, **kw)
        boots[b] = [r.prediction for r in runs]
    back = lambda v: params.mu + params.sigma * v
    return RainfallForecast(
        params,
        years[need - c.L :],
        back(pred),
        back(boots.min(axis=0)) if c.n_bootstrap else back(pred),
        back(boots.max(axis=0)) if c.n_bootstrap else back(pred),
        x[need - c.L :] if c.L else None,
    )

"""Command line tool for simulating, forecasting and tuning max-stable processes.

Every command writes its outputs plus ``<out>.manifest.json``.  Flags can also
be supplied through ``--config file.json`` whose keys are the flag names with
underscores (command-line flags win).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .. import frechet
from ..errors import MSExtrapError
from ..metrics import davis_resnick_from_excursion, excursion_empirical
from ..predict.forecast import forecast_field_2d, forecast_steps
from ..predict.problem import OptimizerConfig, Variant
from ..simulate import GridSpec, Path, simulate_max_stable
from ..taildep import ModelSpec, calibrate_sigma
from ..tune import tune_gamma
from . import io
from .rainfall import RainfallConfig, ingest_rainfall, rainfall_forecast

log = logging.getLogger("msextrap")

THREADS_ENV = "MSEXTRAP_THREADS"


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _gamma(text: str):
    if text == "auto":
        return text
    try:
        g = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("gamma must be a number or 'auto'") from None
    if g < 0:
        raise argparse.ArgumentTypeError("gamma must be nonnegative")
    return g


def _add_model(p, required=True):
    p.add_argument("--model", choices=["br", "smith", "eg"], required=required)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--theta", type=float, help="extremal coefficient at lag 1")
    g.add_argument("--sigma", type=float, help="covariance parameter")


def _add_optimizer(p):
    p.add_argument("--method", choices=["adam", "classic-sgd"], default="adam")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--patience", type=int, default=200)
    p.add_argument("--max-iters", type=int, default=20_000)
    p.add_argument("--no-log-param", action="store_true", help="optimize weights directly instead of their logs")
    p.add_argument("--restarts", type=int, default=0)


def _optimizer(a) -> OptimizerConfig:
    return OptimizerConfig(
        method=a.method, eta=a.eta, patience=a.patience, max_iters=a.max_iters,
        reparametrize_log=not a.no_log_param, seed=a.seed, restarts=a.restarts,
    )


def _spec(a, dim=1) -> ModelSpec:
    if a.sigma is not None:
        return ModelSpec(a.model, a.sigma, dim)
    if a.theta is None:
        raise MSExtrapError("give --theta or --sigma")
    return ModelSpec(a.model, calibrate_sigma(a.model, a.theta), dim)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="msextrap", description=__doc__.splitlines()[0])
    top.add_argument("-v", "--verbose", action="store_true")
    sub = top.add_subparsers(dest="command", required=True)

    def command(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file with default flag values")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=_default_threads())
        return p

    p = command("simulate", "simulate a max-stable path or square field")
    _add_model(p)
    p.add_argument("--length", type=int, help="series length (1D)")
    p.add_argument("--side", type=int, help="side of a square 2D field")
    p.add_argument("--out", required=True)
    p.add_argument("--json-matrix", help="also write a 2D field as a JSON matrix")

    p = command("forecast", "multi-step forecast of a 1D path")
    p.add_argument("--input", required=True)
    p.add_argument("--n", type=int, required=True, help="forecast sample size")
    p.add_argument("--N", type=int, required=True, help="number of learning samples")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--gamma", type=_gamma, default=0.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.NON_BOOTSTRAP.value)
    p.add_argument("--no-holdout", action="store_true", help="forecast past the end of the input")
    p.add_argument("--envelope", type=int, default=0, help="number of bootstrap runs for a min/max envelope")
    p.add_argument("--rainfall", action="store_true",
                   help="input is a year,value series: fit a shifted Frechet law and forecast on its scale")
    p.add_argument("--fit-on", choices=["train", "all"], default="train")
    _add_model(p, required=False)
    p.add_argument("--K", type=int, default=1000, help="replications for --gamma auto")
    p.add_argument("--out", required=True)
    _add_optimizer(p)

    p = command("forecast2d", "extend a square field by m rows and columns")
    p.add_argument("--input", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--json-matrix")
    _add_optimizer(p)

    p = command("tune-gamma", "choose the penalty weight by simulation")
    _add_model(p)
    p.add_argument("--K", type=int, default=1000)
    p.add_argument("--gamma-max", type=int, default=20)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--out", required=True)
    _add_optimizer(p)

    p = command("fit-frechet", "quasi-ML fit of a shifted Frechet law")
    p.add_argument("--input", required=True, help="CSV whose 'value' (or last) column holds the data")
    p.add_argument("--out", required=True)

    p = command("metrics", "empirical excursion metric between truth and predictions")
    p.add_argument("--truth", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = command("ingest", "assemble an annual-maxima series from station CSVs")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--primary", required=True)
    p.add_argument("--out", required=True)
    return top


def _parse(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    sub = parser._subparsers._group_actions[0].choices.get(known.command)
    if known.config and sub is not None:
        try:
            with open(known.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            parser.error(f"cannot read config: {err}")
        if not isinstance(doc, dict):
            parser.error("config must be a JSON object")
        bad = set(doc) - {a.dest for a in sub._actions}
        if bad:
            parser.error(f"unknown config keys: {sorted(bad)}")
        for action in sub._actions:
            if action.dest in doc:
                action.required = False  # supplied by the file
        sub.set_defaults(**doc)
    return parser, parser.parse_args(argv)


def _cmd_simulate(a):
    if (a.length is None) == (a.side is None):
        raise MSExtrapError("give exactly one of --length or --side")
    dim = 1 if a.length is not None else 2
    spec = _spec(a, dim)
    grid = GridSpec.line(a.length) if dim == 1 else GridSpec.square(a.side)
    path = simulate_max_stable(spec, grid, np.random.default_rng(a.seed))
    path.to_csv(a.out)
    outs = [a.out]
    if a.json_matrix:
        if dim != 2:
            raise MSExtrapError("--json-matrix needs a 2D field")
        path.to_json_matrix(a.json_matrix)
        outs.append(a.json_matrix)
    return outs, {"model": spec.to_dict()}


def _read_year_series(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0][:2] != ["year", "value"]:
        raise MSExtrapError(f"{path}: expected header year,value")
    return np.array([int(r[0]) for r in rows[1:]]), np.array([float(r[1]) for r in rows[1:]])


def _cmd_forecast(a):
    opt = _optimizer(a)
    if a.rainfall:
        if a.gamma == "auto":
            raise MSExtrapError("--gamma auto is not available with --rainfall")
        years, vals = _read_year_series(a.input)
        cfg = RainfallConfig(n=a.n, N=a.N, L=a.horizon, gamma=a.gamma, n_bootstrap=a.envelope,
                             fit_on=a.fit_on, optimizer=opt)
        res = rainfall_forecast(vals, years, cfg)
        env = (res.envelope_min, res.envelope_max) if a.envelope else (None, None)
        io.write_forecast_csv(a.out, res.predictions, *env)
        return [a.out], {"frechet": res.params.to_dict(), "years": res.years.tolist()}

    path = Path.from_csv(a.input)
    gamma = a.gamma
    extra = {}
    if gamma == "auto":
        if a.model is None:
            raise MSExtrapError("--gamma auto needs --model and --theta/--sigma to simulate from")
        sweep = tune_gamma(_spec(a), K=a.K, rng=np.random.default_rng(a.seed), n=a.n, N=a.N,
                           config=opt, threads=a.threads)
        gamma = sweep.gamma_opt
        extra["gamma_opt"] = gamma
    kw = dict(holdout=not a.no_holdout)
    point = forecast_steps(path, a.horizon, a.n, a.N, gamma, a.alpha, opt,
                           variant=Variant(a.variant), **kw)
    preds = [p.prediction for p in point]
    env = (None, None)
    if a.envelope:
        runs = []
        for b in range(a.envelope):
            cfg = OptimizerConfig(**{**opt.to_dict(), "seed": opt.seed + 1 + b})
            runs.append([r.prediction for r in forecast_steps(
                path, a.horizon, a.n, a.N, gamma, a.alpha, cfg, variant=Variant.BOOTSTRAP, **kw)])
        runs = np.array(runs)
        env = (runs.min(axis=0), runs.max(axis=0))
    io.write_forecast_csv(a.out, preds, *env)
    return [a.out], {"gamma": gamma, **extra}


def _cmd_forecast2d(a):
    field = Path.from_csv(a.input)
    out = forecast_field_2d(field, a.m, a.gamma, a.alpha, _optimizer(a), N=a.N)
    out.to_csv(a.out)
    outs = [a.out]
    if a.json_matrix:
        out.to_json_matrix(a.json_matrix)
        outs.append(a.json_matrix)
    return outs, {}


def _cmd_tune(a):
    spec = _spec(a)
    sweep = tune_gamma(spec, [float(g) for g in range(a.gamma_max + 1)], K=a.K,
                       rng=np.random.default_rng(a.seed), n=a.n, N=a.N,
                       config=_optimizer(a), threads=a.threads)
    sweep.to_csv(a.out)
    print(f"gamma_opt={sweep.gamma_opt:g}")
    return [a.out], {"model": spec.to_dict(), "gamma_opt": sweep.gamma_opt}


def _cmd_fit(a):
    params = frechet.fit_quasi_ml(io.read_values_csv(a.input))
    with open(a.out, "w") as fh:
        json.dump(params.to_dict(), fh, indent=2)
    print(json.dumps(params.to_dict()))
    return [a.out], {}


def _cmd_metrics(a):
    marg = frechet.FrechetParams(a.alpha, a.mu, a.scale)
    e = excursion_empirical(io.read_values_csv(a.truth), io.read_values_csv(a.pred), marg)
    doc = {"excursion": e.value, "standard_error": e.standard_error}
    if 0 <= e.value < 1:
        doc["davis_resnick"] = davis_resnick_from_excursion(e.value)
    with open(a.out, "w") as fh:
        json.dump(doc, fh, indent=2)
    print(json.dumps(doc))
    return [a.out], {}


def _cmd_ingest(a):
    recs = ingest_rainfall(a.input, a.primary)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["year", "value"])
        for r in recs:
            w.writerow([r.year, repr(r.annual_max_daily)])
    return [a.out], {"years": [recs[0].year, recs[-1].year]}


COMMANDS = {
    "simulate": _cmd_simulate,
    "forecast": _cmd_forecast,
    "forecast2d": _cmd_forecast2d,
    "tune-gamma": _cmd_tune,
    "fit-frechet": _cmd_fit,
    "metrics": _cmd_metrics,
    "ingest": _cmd_ingest,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, a = _parse(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if a.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        outputs, extra = COMMANDS[a.command](a)
    except (MSExtrapError, ValueError, OSError) as err:
        io.eprint(f"msextrap {a.command}: error: {err}")
        return 1
    config = {k: v for k, v in vars(a).items() if k not in ("config", "verbose")}
    config.update(extra)
    io.write_manifest(outputs[0], argv, config, a.seed, outputs)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Output helpers and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import sys
from pathlib import Path

import numba
import numpy as np
import scipy

from .. import __version__


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def versions() -> dict:
    return {
        "msextrap": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def write_manifest(primary_output, argv, config: dict, seed, outputs) -> Path:
    """Write ``<primary_output>.manifest.json`` describing how the outputs were made."""
    path = Path(str(primary_output) + ".manifest.json")
    doc = {
        "argv": list(argv),
        "config": config,
        "config_sha256": config_hash(config),
        "seed": seed,
        "versions": versions(),
        "outputs": {str(p): sha256_file(p) for p in outputs},
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str))
    return path


def write_forecast_csv(path, predictions, env_min=None, env_max=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["step", "prediction"]
        if env_min is not None:
            head += ["envelope_min", "envelope_max"]
        w.writerow(head)
        for s, p in enumerate(predictions, start=1):
            row = [s, repr(float(p))]
            if env_min is not None:
                row += [repr(float(env_min[s - 1])), repr(float(env_max[s - 1]))]
            w.writerow(row)


def read_values_csv(path) -> np.ndarray:
    """Values from the last column named ``value`` (or the only column) of a CSV."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty file")
    head = rows[0]
    col = head.index("value") if "value" in head else len(head) - 1
    try:
        float(head[col])
        body = rows
    except ValueError:
        body = rows[1:]
    return np.array([float(r[col]) for r in body])


def eprint(*args) -> None:
    print(*args, file=sys.stderr)

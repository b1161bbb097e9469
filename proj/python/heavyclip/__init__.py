"""Clipped SGD / SSTM for stochastic optimization with heavy-tailed noise."""

import json

from ._core import (
    InvalidArgument,
    __version__,
    clip,
    clipped_bounds,
    ks_normal_fit,
    noise_tail,
    oscillation_metric,
    quantile,
    sample_noise,
    sstm_alpha,
    subgaussian_score,
)
from . import _core

RECORD_FIELDS = ("k", "f_gap", "dist", "calls", "lambda", "clipped", "m")


def resolve_schedule(config):
    """Schedule a config dict resolves to, as a dict."""
    return json.loads(_core._resolve_schedule(json.dumps(config)))


def run_experiment(config):
    """Run an ensemble. Records come back as dicts keyed by RECORD_FIELDS."""
    out = json.loads(_core._run_experiment(json.dumps(config)))
    for trial in out["trials"]:
        trial["records"] = [dict(zip(RECORD_FIELDS, r)) for r in trial["records"]]
    return out


def solve_reference(dataset, tol=1e-8, out=""):
    return _core._solve_reference(str(dataset), tol, str(out))


def diagnose(dataset, optimum="", solve=False, bins=50, output_dir=""):
    return json.loads(_core._diagnose(str(dataset), str(optimum), solve, bins, str(output_dir)))


def verify(criterion, data_dir=""):
    return json.loads(_core._verify(criterion, str(data_dir)))


__all__ = [
    "InvalidArgument",
    "RECORD_FIELDS",
    "__version__",
    "clip",
    "clipped_bounds",
    "diagnose",
    "ks_normal_fit",
    "noise_tail",
    "oscillation_metric",
    "quantile",
    "resolve_schedule",
    "run_experiment",
    "sample_noise",
    "solve_reference",
    "sstm_alpha",
    "subgaussian_score",
    "verify",
]

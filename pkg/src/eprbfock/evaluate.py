"""Row producers for the CLI verbs.  Each function takes one concrete
(sweep-point) config and returns plain dict rows, so sweep points can be
farmed out to worker processes."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from pathlib import Path
from typing import Iterable

import numpy as np

from . import config as cfgmod
from . import eprb, lattice
from .eprb import AnalyzerPair, CorrelationSample
from .errors import DegenerateKinematicsError, DomainError
from .field import (
    PointImpulse, UniformInSpace, correlation_from_L, entanglement_L_gaussian,
    entanglement_L_quadrature, steepest_descent_L,
)

SCHEMA_VERSION = 1
SAMPLE_COLUMNS = ("n1x", "n1y", "n1z", "n2x", "n2y", "n2z", "correlation")


class SampleFileError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _analyzer_columns(pair: AnalyzerPair) -> dict:
    return {f"n{k}{ax}": float(v[i]) for k, v in ((1, pair.n1), (2, pair.n2))
            for i, ax in enumerate("xyz")}


def _echo(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def _base(model: str, index: int) -> dict:
    return {"schema_version": SCHEMA_VERSION, "model": model, "point": index}


def _quiet(fn, *args):
    """Evaluate with window warnings recorded instead of printed."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        value = fn(*args)
    return value, "; ".join(str(w.message) for w in caught)


# -- eprb4 ---------------------------------------------------------------------

def eprb_rows(cfg: dict, index: int, seed: int) -> list[dict]:
    gamma = cfgmod._number(cfg, "gamma", "")
    rows = []
    for pair in cfgmod.read_analyzers(cfg, seed):
        c1 = eprb.correlation_1q(gamma, pair)
        cf = eprb.correlation_fock(gamma, pair)
        closed = eprb.correlation_closed_form(gamma, pair)
        rows.append({
            **_base("eprb4", index), "gamma": gamma, **_analyzer_columns(pair),
            "correlation": c1, "correlation_fock": cf, "correlation_closed": closed,
            "path_spread": max(c1, cf, closed) - min(c1, cf, closed),
            "path": "first-quantized;fock;closed-form", "input": _echo(cfg),
        })
    return rows


# -- continuum -----------------------------------------------------------------

def continuum_L(cfg: dict) -> dict:
    sc = cfgmod.field_scenario(cfg)
    out = {"t0": sc.t0, "t": sc.t, "epsilon": sc.epsilon}
    lg, warn_g = _quiet(entanglement_L_gaussian, sc)
    lq, warn_q = _quiet(entanglement_L_quadrature, sc)
    scale = max(abs(lg), abs(lq))
    out.update({"L_gaussian": lg, "L_quadrature": lq,
                "L_relative_spread": abs(lg - lq) / scale if scale > 0 else 0.0})
    sd_cols = {"L_steepest": None, "t_min": None, "d_min": None,
               "sd_rate_ratio": None, "sd_curvature_ratio": None, "sd_spreading": None}
    if isinstance(sc.coupling, UniformInSpace):
        try:
            sd = steepest_descent_L(sc)
            sd_cols = {"L_steepest": sd.L, "t_min": sd.t_min, "d_min": sd.d_min,
                       "sd_rate_ratio": sd.validity["kappa_rate_ratio"],
                       "sd_curvature_ratio": sd.validity["kappa_curvature_ratio"],
                       "sd_spreading": sd.validity["spreading"]}
        except DegenerateKinematicsError:
            pass
    out.update(sd_cols)
    kind = ("point-impulse closed form" if isinstance(sc.coupling, PointImpulse)
            else "gaussian closed form")
    out["path"] = f"{kind};density quadrature" + (";steepest descent" if sd_cols["L_steepest"] is not None else "")
    out["warning"] = warn_g or warn_q
    return out


def continuum_correlate_rows(cfg: dict, index: int, seed: int) -> list[dict]:
    ls = continuum_L(cfg)
    rows = []
    for pair in cfgmod.read_analyzers(cfg, seed):
        corr, warn = _quiet(correlation_from_L, pair, ls["epsilon"] * ls["L_gaussian"])
        row = {**_base("continuum", index), **ls, **_analyzer_columns(pair), "correlation": corr}
        if warn:
            row["warning"] = "; ".join(filter(None, [row["warning"], warn]))
        row["input"] = _echo(cfg)
        rows.append(row)
    return rows


def continuum_entangle_rows(cfg: dict, index: int, seed: int) -> list[dict]:
    return [{**_base("continuum", index), **continuum_L(cfg), "input": _echo(cfg)}]


# -- lattice -------------------------------------------------------------------

def _lattice_common(sc: lattice.LatticeScenario) -> dict:
    out = {"sites": sc.config.sites, "spacing": sc.config.spacing, "t0": sc.t0, "t": sc.t,
           "epsilon": sc.epsilon, "L_lattice": lattice.lattice_L(sc)}
    try:
        out["L_continuum"] = lattice.continuum_L(sc)
    except DomainError:
        out["L_continuum"] = None
    return out


def lattice_correlate_rows(cfg: dict, index: int, seed: int) -> list[dict]:
    rows = []
    for pair in cfgmod.read_analyzers(cfg, seed):
        sc = cfgmod.lattice_scenario(cfg, pair)
        common = _lattice_common(sc)
        exact = lattice.lattice_exact_correlation(sc)
        pert, _ = _quiet(correlation_from_L, pair, sc.epsilon * common["L_lattice"])
        rows.append({**_base("lattice", index), **common, **_analyzer_columns(pair),
                     "correlation": exact, "correlation_perturbative": pert,
                     "difference": abs(exact - pert),
                     "path": "exact evolution;first order", "input": _echo(cfg)})
    return rows


def lattice_entangle_rows(cfg: dict, index: int, seed: int) -> list[dict]:
    pair = cfgmod.read_analyzers(cfg, seed)[0] if ("analyzers" in cfg or "random_pairs" in cfg) \
        else AnalyzerPair([0, 0, 1], [0, 0, 1])
    sc = cfgmod.lattice_scenario(cfg, pair)
    return [{**_base("lattice", index), **_lattice_common(sc),
             "path": "lattice density quadrature", "input": _echo(cfg)}]


def lattice_compare_rows(cfg: dict | None, seed: int) -> list[dict]:
    if cfg:
        pair = cfgmod.read_analyzers(cfg, seed)[0]
        sc = cfgmod.lattice_scenario(cfg, pair)
        eps = cfgmod.read_epsilons(cfg)
    else:
        sc = lattice.default_scenario()
        eps = [1e-1, 3e-2, 1e-2, 3e-3]
    fit = lattice.perturbation_residuals(sc, eps)
    L = lattice.lattice_L(sc)
    rows = []
    for k, (e, res) in enumerate(zip(fit.epsilons, fit.residuals)):
        rows.append({
            "schema_version": SCHEMA_VERSION, "model": "lattice", "point": k,
            "sites": sc.config.sites, "epsilon": float(e), "L_lattice": L,
            "correlation_perturbative": _quiet(correlation_from_L, sc.analyzers, float(e) * L)[0],
            "residual": float(res), "slope": fit.slope,
        })
    return rows


PRODUCERS = {
    ("correlate", "eprb4"): eprb_rows,
    ("correlate", "continuum"): continuum_correlate_rows,
    ("correlate", "lattice"): lattice_correlate_rows,
    ("entangle", "continuum"): continuum_entangle_rows,
    ("entangle", "lattice"): lattice_entangle_rows,
}


def evaluate_point(verb: str, cfg: dict, index: int, seed: int) -> list[dict]:
    model = cfgmod.read_model(cfg)
    try:
        producer = PRODUCERS[(verb, model)]
    except KeyError:
        raise cfgmod.ConfigError("model", f"{verb} is not defined for model {model}") from None
    return producer(cfg, index, seed)


# -- sample files and row IO ---------------------------------------------------

def read_samples(path: str | Path) -> list[CorrelationSample]:
    """Read ``n1x..n2z, correlation`` CSV rows; extra columns are ignored."""
    text = Path(path).read_text()
    if not text.strip():
        return []
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    missing = [c for c in SAMPLE_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise SampleFileError([f"line 1: missing columns {', '.join(missing)}"])
    samples, errors = [], []
    for row in reader:
        line = reader.line_num
        try:
            vals = [float(row[c]) for c in SAMPLE_COLUMNS]
        except (TypeError, ValueError):
            errors.append(f"line {line}: non-numeric or missing value")
            continue
        try:
            pair = AnalyzerPair(vals[0:3], vals[3:6])
            samples.append(CorrelationSample(pair, vals[6]))
        except ValueError as exc:
            errors.append(f"line {line}: {exc}")
    if errors:
        raise SampleFileError(errors)
    return samples


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_rows(rows: Iterable[dict], fmt: str) -> str:
    rows = list(rows)
    if fmt == "jsonl":
        return "".join(json.dumps(_jsonable(r)) + "\n" for r in rows)
    columns: list[str] = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def _jsonable(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if isinstance(v, float) and not math.isfinite(v):
            v = None
        elif isinstance(v, (np.floating, np.integer, np.bool_)):
            v = v.item()
        out[k] = v
    return out


def parse_rows(text: str, fmt: str) -> list[dict]:
    """Inverse of :func:`format_rows`: numbers come back as int or float,
    empty cells as None."""
    if fmt == "jsonl":
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({k: _parse_cell(v) for k, v in row.items()})
    return rows


def _parse_cell(value: str):
    if value == "":
        return None
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value

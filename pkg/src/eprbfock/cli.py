"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from . import evaluate, verify
from .eprb import fit_two_gamma
from .errors import (
    DegenerateKinematicsError, DomainError, EstimationError, PreconditionError, ResourceError,
)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML scenario file")
    common.add_argument("--output", type=Path, help="write rows here instead of stdout")
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    common.add_argument("--seed", type=int, help="overrides the config seed (default 0)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweep points")
    common.add_argument("--timing", action="store_true",
                        help="add an elapsed_s column (makes output non-reproducible)")

    parser = argparse.ArgumentParser(
        prog="eprbfock",
        description="EPRB spin-correlation models in fermionic Fock space (hbar = 1, "
                    "all inputs dimensionless).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    p.add_argument("suite", choices=(*verify.SUITES, "all"))

    sub.add_parser("correlate", parents=[common], help="spin correlations for a config")
    sub.add_parser("entangle", parents=[common], help="entanglement integral L only")

    p = sub.add_parser("sweep", parents=[common], help="correlate over a parameter sweep")
    p.add_argument("--parameter", help="dotted config key to sweep")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--scale", choices=cfgmod.SWEEP_SCALES)

    p = sub.add_parser("fit", parents=[common], help="least-squares 2-gamma fit of a sample file")
    p.add_argument("samples", type=Path, help="CSV with n1x..n2z and correlation columns")

    sub.add_parser("lattice-compare", parents=[common],
                   help="exact vs first-order lattice correlation over epsilon")
    return parser


def _load(args, required: bool = True) -> dict:
    if args.config is None and required:
        raise UsageError("--config is required for this command")
    return cfgmod.load_config(args.config)


def _seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return args.seed
    seed = cfg.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise cfgmod.ConfigError("seed", f"expected an integer, got {seed!r}")
    return seed


def _emit(rows: list[dict], args) -> None:
    text = evaluate.format_rows(rows, args.format)
    if args.output is None:
        sys.stdout.write(text)
    else:
        args.output.write_text(text)


def _timed(verb: str, cfg: dict, index: int, seed: int, timing: bool) -> list[dict]:
    start = time.perf_counter()
    rows = evaluate.evaluate_point(verb, cfg, index, seed)
    if timing:
        elapsed = time.perf_counter() - start
        for r in rows:
            r["elapsed_s"] = elapsed
    return rows


def run_points(verb: str, cfg: dict, seed: int, jobs: int, timing: bool = False) -> list[dict]:
    """Evaluate every sweep point; rows come back in sweep order."""
    cfgmod.read_model(cfg)
    points = cfgmod.sweep_points(cfg)
    args = [(verb, p, k, seed, timing) for k, p in enumerate(points)]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_timed, *zip(*args)))
    else:
        chunks = [_timed(*a) for a in args]
    return [row for chunk in chunks for row in chunk]


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else 0
    checks = verify.run_suite(args.suite, seed)
    width = max(len(c.name) for c in checks)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  [{c.suite}] {c.name:<{width}}  deviation {c.deviation:.3e}  "
              f"tolerance {c.tolerance:.1e}")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    if args.output is not None:
        rows = [{"schema_version": evaluate.SCHEMA_VERSION, "suite": c.suite, "check": c.name,
                 "deviation": c.deviation, "tolerance": c.tolerance, "passed": c.passed}
                for c in checks]
        args.output.write_text(evaluate.format_rows(rows, args.format))
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_points(args, verb: str) -> int:
    cfg = _load(args)
    _emit(run_points(verb, cfg, _seed(args, cfg), args.jobs, args.timing), args)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    overrides = {k: getattr(args, k) for k in ("parameter", "start", "stop", "steps", "scale")
                 if getattr(args, k) is not None}
    if overrides:
        sweep = dict(cfg.get("sweep") or {})
        if {"start", "stop", "steps"} & overrides.keys():
            sweep.pop("values", None)
        sweep.update(overrides)
        cfg["sweep"] = sweep
    if cfgmod.read_sweep(cfg) is None:
        raise UsageError("sweep needs a sweep block in the config or --parameter/--start/--stop/--steps")
    _emit(run_points("correlate", cfg, _seed(args, cfg), args.jobs, args.timing), args)
    return EXIT_OK


def cmd_fit(args) -> int:
    samples = evaluate.read_samples(args.samples)
    fit = fit_two_gamma(samples)
    _emit([{"schema_version": evaluate.SCHEMA_VERSION, "estimate": fit.estimate,
            "residual": fit.residual, "stderr": fit.stderr, "n_samples": fit.n_samples,
            "input": str(args.samples)}], args)
    return EXIT_OK


def cmd_lattice_compare(args) -> int:
    cfg = _load(args, required=False) if args.config else None
    if cfg is not None and cfgmod.read_model(cfg) != "lattice":
        raise cfgmod.ConfigError("model", "lattice-compare needs model: lattice")
    seed = _seed(args, cfg or {})
    rows = evaluate.lattice_compare_rows(cfg, seed)
    _emit(rows, args)
    slope = rows[0]["slope"] if rows else None
    msg = "slope unavailable (need two positive epsilons)" if slope is None else f"log-log slope {slope:.4f}"
    print(msg, file=sys.stderr)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    handlers = {
        "verify": cmd_verify,
        "correlate": lambda a: cmd_points(a, "correlate"),
        "entangle": lambda a: cmd_points(a, "entangle"),
        "sweep": cmd_sweep,
        "fit": cmd_fit,
        "lattice-compare": cmd_lattice_compare,
    }
    try:
        return handlers[args.command](args)
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except cfgmod.ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_USAGE
    except evaluate.SampleFileError as exc:
        print("sample file error:", file=sys.stderr)
        for line in exc.errors:
            print(f"  {line}", file=sys.stderr)
        return EXIT_USAGE
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, DomainError, PreconditionError, DegenerateKinematicsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

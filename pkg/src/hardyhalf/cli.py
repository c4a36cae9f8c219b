"""Command line entry point: ``hardyhalf run|list|show``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .core_math import DomainError
from .experiments import REGISTRY, ConfigError, emit, make_config, run

EXIT_PASS, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardyhalf", description="Numerical verification experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment and write its report")
    r.add_argument("--experiment", help="registered experiment name")
    r.add_argument("--config", help="JSON config file; flags override its fields")
    r.add_argument("--out", help="output path prefix (writes PREFIX.csv and PREFIX.json); '-' for stdout")
    r.add_argument("--format", choices=("csv", "json"), default=None,
                   help="only write this format (default: both files, or json for '--out -')")
    r.add_argument("--seed", type=int)
    r.add_argument("--allow-unconverged", action="store_true",
                   help="do not fail the run on rows whose quadrature did not converge")
    r.add_argument("--tol-scale", type=float, help="multiply every tolerance by this factor")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for grid points")
    r.add_argument("--quiet", action="store_true", help="no progress on standard error")
    sub.add_parser("list", help="list registered experiments")
    s = sub.add_parser("show", help="print the claim and tolerance of an experiment")
    s.add_argument("experiment")
    return ap


def _load_config(args) -> dict:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    return data


def _cmd_run(args) -> int:
    try:
        data = _load_config(args)
        cfg = make_config(data, experiment=args.experiment, seed=args.seed, output=args.out,
                          tol_scale=args.tol_scale)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        report = run(cfg, jobs=args.jobs, progress=not args.quiet)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = cfg.output
    try:
        if out == "-":
            emit(report, args.format or "json", "-")
        elif out:
            for fmt in ((args.format,) if args.format else ("csv", "json")):
                emit(report, fmt, f"{out}.{fmt}")
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_ERROR
    status = "PASS" if report.passed else "FAIL"
    print(f"{report.experiment}: {status} worst_violation={report.worst_violation:.6g} "
          f"rows={len(report.rows)} runtime={report.runtime_seconds:.1f}s", file=sys.stderr)
    if not report.all_converged and not args.allow_unconverged:
        return EXIT_ERROR
    if report.worst_violation > 0.0:
        return EXIT_VIOLATION
    return EXIT_PASS


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name, exp in REGISTRY.items():
            print(f"{name}: {exp.claim}")
        return EXIT_PASS
    if args.command == "show":
        exp = REGISTRY.get(args.experiment)
        if exp is None:
            print(f"error: unknown experiment {args.experiment!r}", file=sys.stderr)
            return EXIT_ERROR
        print(f"{exp.name}\nclaim: {exp.claim}\ntolerance: {exp.tolerance}\n"
              f"defaults: {json.dumps(exp.defaults, sort_keys=True)}")
        return EXIT_PASS
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())

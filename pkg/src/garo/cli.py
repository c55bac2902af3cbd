"""``garo`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance-threshold failure or benchmark regression.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegeneracyError, DomainError, ModelLoadError, NumericalError
from .experiments import EXPERIMENTS, RUNNERS, compare_bench, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

log = logging.getLogger("garo")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="garo", description="Geometric-algebra robotics experiments.")
    p.add_argument("command", choices=EXPERIMENTS)
    p.add_argument("--config", help="YAML configuration (defaults to the shipped one for the command)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file; defaults to stdout for the report only")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default: json for bench, csv otherwise)")
    p.add_argument("--trials", type=int, help="ik: number of trials")
    p.add_argument("--tol", type=float, help="ik: cost tolerance")
    p.add_argument("--target", help="reach: target name or primitive literal")
    p.add_argument("--horizon", type=int, help="reach/pointmass: planning horizon in steps")
    p.add_argument("--dt", type=float, help="reach/pointmass: time step in seconds")
    p.add_argument("--executions", type=int, help="bench: executions per repetition")
    p.add_argument("--repetitions", type=int, help="bench: repetitions")
    p.add_argument("--compare", help="bench: baseline JSON; regressions beyond the tolerance exit with code 4")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _config(args) -> dict:
    cfg = load_config(args.config or args.command)
    if cfg.get("experiment", args.command) != args.command:
        raise ConfigError(f"configuration is for {cfg['experiment']!r}, not {args.command!r}")
    for key in ("seed", "trials", "tol", "target", "horizon", "dt", "executions", "repetitions"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    if args.out:
        cfg["output"] = args.out
    return cfg


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        result = RUNNERS[args.command](cfg)
        fmt = args.format or cfg.get("format") or ("json" if args.command == "bench" else "csv")
        out = cfg.get("output")
        if out:
            if fmt == "csv" and result.rows is not None:
                write_csv(out, result.columns, result.rows)
            else:
                payload = dict(result.report)
                if args.command != "bench" and result.rows is not None:
                    payload["columns"] = result.columns
                    payload["rows"] = result.rows.tolist()
                write_json(out, payload)
        code = EXIT_OK if result.passed else EXIT_ACCEPTANCE
        if args.command == "bench" and args.compare:
            baseline = json.loads(Path(args.compare).read_text())
            cmp = compare_bench(result.report, baseline, float(cfg.get("regression_tolerance", 0.15)))
            result.report["comparison"] = cmp
            if any(v["regression"] for v in cmp.values()):
                code = EXIT_ACCEPTANCE
        print(json.dumps(_jsonable(result.report), indent=2))
        return code
    except (ConfigError, ModelLoadError, DegeneracyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"garo: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, DomainError, FloatingPointError) as exc:
        print(f"garo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure
(a JSON error report is still written).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ..errors import CenterlabError, ConfigError
from .commands import run_bracket, run_centralizer, run_flow, run_orbits, run_plot
from .config import load_config
from .report import build_report, dumps, emit, write_atomic
from .reproduce import STUDIES, default_thresholds

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

JSON_ANALYSES = {"bracket": run_bracket, "orbits": run_orbits, "centralizer": run_centralizer}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random sampling step")
    common.add_argument("--no-timestamp", action="store_true", help="omit generated_at from JSON reports")
    common.add_argument("--out", help="output file (default: stdout)")

    p = argparse.ArgumentParser(prog="centerlab", description="Centralizers of vector fields, numerically.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, text in (
        ("bracket", "Lie or Poisson bracket over a grid (JSON)"),
        ("flow", "one trajectory (CSV)"),
        ("orbits", "equilibria and periodic orbits (JSON)"),
        ("centralizer", "membership and triviality report (JSON)"),
        ("plot", "planar phase portrait (SVG)"),
    ):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("--config", required=True, help="scenario file")
    rp = sub.add_parser("reproduce", parents=[common], help="run a built-in study (JSON)")
    rp.add_argument("study", choices=sorted(STUDIES))
    return p


def _fail(message: str, code: int) -> int:
    print(f"centerlab: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    rng = np.random.default_rng(args.seed)
    stamp = not args.no_timestamp
    command = args.command

    if command == "reproduce":
        scenario = {"command": "reproduce", "study": args.study, "seed": args.seed}
        resolved = default_thresholds()
        run = lambda: STUDIES[args.study](rng)  # noqa: E731
    else:
        try:
            sc = load_config(args.config)
        except ConfigError as exc:
            return _fail(f"{args.config}: {exc}", EXIT_CONFIG)
        if sc.analysis != command:
            return _fail(f"{args.config}: config holds an [analysis {sc.analysis}] section, "
                         f"not {command}", EXIT_CONFIG)
        scenario = {"command": command, "config": args.config, "seed": args.seed, **sc.to_dict()}
        resolved = sc.resolved_thresholds()
        args.out = args.out or sc.options.get("out")

    try:
        if command == "reproduce":
            result, thresholds, warnings = run()
        elif command in JSON_ANALYSES:
            result, thresholds, warnings = JSON_ANALYSES[command](sc, rng)
        elif command == "flow":
            emit(run_flow(sc, rng), args.out)
            return EXIT_OK
        else:
            if not args.out:
                return _fail("plot needs an output path (--out or out = ...)", EXIT_CONFIG)
            svg, warnings = run_plot(sc, rng)
            write_atomic(args.out, svg)
            for w in warnings:
                print(f"centerlab: warning: {w}", file=sys.stderr)
            return EXIT_OK
    except ConfigError as exc:
        return _fail(f"{getattr(args, 'config', '')}: {exc}", EXIT_CONFIG)
    except CenterlabError as exc:
        report = build_report(scenario, None, resolved, [], timestamp=stamp, error=exc.to_dict())
        text = dumps(report)
        if command in ("flow", "plot") or not args.out:
            sys.stdout.write(text)
        else:
            write_atomic(args.out, text)
        return _fail(f"numerical failure: {exc}", EXIT_NUMERICAL)

    report = build_report(scenario, result, {**resolved, **thresholds}, warnings, timestamp=stamp)
    emit(dumps(report), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

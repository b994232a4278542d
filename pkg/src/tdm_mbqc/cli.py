"""Command-line entry point: ``tdm-mbqc <subcommand> [options]``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .chain import ChainError, derive_seed
from .config import ConfigError, ExperimentConfig, load_config
from .estimation import EstimationError
from .experiments import header, render_report, replay_report, run_command
from .gates import CompileError, GateError
from .gaussian import GaussianError
from .targets import TargetParseError
from .trace import TraceError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment config")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--shots", type=int, help="shots per measurement setting")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--analytic", dest="mode", action="store_const", const="analytic",
                      help="exact moments, no sampling noise")
    mode.add_argument("--sampled", dest="mode", action="store_const", const="sampled",
                      help="Monte Carlo shots (default)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for shot sampling")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")

    p = _Parser(prog="tdm-mbqc", description="Time-domain MBQC simulator and analysis harness.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("gate-sweep", parents=[common], help="S matrices of single-step gates")
    sub.add_parser("nullifier-table", parents=[common], help="nullifier variances and thresholds")
    sub.add_parser("multistep", parents=[common], help="n-step identity chains")
    c = sub.add_parser("compile", parents=[common], help="angle schedule for a gate expression")
    c.add_argument("target", help='gate expression, e.g. "R(30)", "S(20)", "R(90)*P(10)", "[[1,0],[0.5,1]]"')
    sub.add_parser("trace-demo", parents=[common], help="synthesise and integrate detector traces")
    r = sub.add_parser("replay", parents=[common], help="regenerate a report and compare bytes")
    r.add_argument("report", type=Path, help="report file written by another subcommand")
    return p


def _experiment(args) -> ExperimentConfig:
    exp = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative", source="command line")
        exp.seed = args.seed
    if args.shots is not None:
        if args.shots < 2:
            raise ConfigError("--shots must be at least 2", source="command line")
        exp.shots = args.shots
    if args.mode is not None:
        exp.mode = args.mode
    exp.seed = derive_seed(exp.seed)
    return exp


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _run(args) -> int:
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1", source="command line")
    if args.command == "replay":
        same, text = replay_report(args.report, args.threads, args.out)
        if args.out is not None:
            _emit(text, args.out)
        print(f"replay {'identical' if same else 'DIFFERS'}: {args.report}", file=sys.stderr)
        return EXIT_OK if same else EXIT_NUMERIC
    exp = _experiment(args)
    extra = {"target": args.target} if args.command == "compile" else {}
    cols, rows = run_command(args.command, exp, extra, args.threads, args.out)
    _emit(render_report(header(args.command, exp, extra), cols, rows, exp.output_format), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            return _run(args)
    except (ConfigError, TargetParseError, GateError, TraceError, ChainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CompileError, GaussianError, EstimationError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

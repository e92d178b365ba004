"""Command-line entry point.

Subcommands mirror the pipeline stages: synth, detect-loff, estimate,
gaps, report. Each reads the config file (if given) with ``--set
key=value`` overrides applied on top, and exits 0 on success, 1 on data
errors, 2 on configuration errors, 3 on numerical failures.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__, pipeline
from .config import load_config
from .errors import ConfigError, DataError, NumericalError

EXIT_OK = 0
EXIT_DATA = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="config file (key = value lines)")
    parser.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        dest="overrides",
        help="override a config key (repeatable)",
    )
    parser.add_argument(
        "--jobs",
        type=int,
        metavar="N",
        help="worker threads (default: all available cores)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olle",
        description="Online language literacy estimates from public post corpora.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic corpus with known latents")
    synth.add_argument("--out", required=True, metavar="DIR", help="corpus directory")
    synth.add_argument(
        "--param",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        dest="params",
        help="generator parameter override (repeatable), e.g. n_countries=20",
    )

    for name, help_text in (
        ("detect-loff", "build popularity curves and detect LoFF bands"),
        ("estimate", "aggregate, normalize, calibrate, and write OLLE"),
        ("gaps", "gender gaps, regional disparity, and regressions"),
        ("report", "render figures and a text report from artifacts"),
    ):
        _add_common(sub.add_parser(name, help=help_text))
    return parser


def _config_from(args: argparse.Namespace):
    overrides = list(args.overrides)
    if args.jobs is not None:
        overrides.append(f"jobs={args.jobs}")
    return load_config(args.config, overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            result = pipeline.cmd_synth(args.out, args.params)
        elif args.command == "detect-loff":
            result = pipeline.cmd_detect_loff(_config_from(args))
        elif args.command == "estimate":
            result = pipeline.cmd_estimate(_config_from(args))
        elif args.command == "gaps":
            result = pipeline.cmd_gaps(_config_from(args))
        else:
            result = pipeline.cmd_report(_config_from(args))
    except ConfigError as exc:
        print(f"olle: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"olle: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DataError as exc:
        print(f"olle: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    for warning in result.pop("warnings", []):
        print(f"olle: warning: {warning}", file=sys.stderr)
    print(json.dumps(result, indent=1, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

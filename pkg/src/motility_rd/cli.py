"""Command-line entry point.

    motility-rd run <config> [--out DIR] [--seed N] [--quiet]
    motility-rd stability <config> [--out DIR]
    motility-rd sweep <config> [--out DIR] [--workers N]
    motility-rd preset fig1 --d 0.1 [--emit-config] [--out DIR]

Exit status: 0 ok, 2 config error, 3 hypothesis violation, 4 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import fig1_config, format_config, parse_config, parse_sweep
from .errors import InvalidInput, ParseError, ValidationError
from .runner import EXIT_CONFIG, EXIT_OK, cmd_run, cmd_stability, cmd_sweep

CONFIG_ERRORS = (ParseError, ValidationError, InvalidInput, OSError)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides [output] dir)")
    common.add_argument("--seed", type=int, help="override the initial-condition seed")
    common.add_argument("--workers", type=int, help="parallel sweep workers")
    common.add_argument("--quiet", action="store_true")

    p = argparse.ArgumentParser(prog="motility-rd", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "simulate one configuration"),
        ("stability", "linear stability report for the configured u_*"),
        ("sweep", "run a parameter sweep from a config with a [sweep] section"),
    ):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("config", type=Path)
    pre = sub.add_parser("preset", parents=[common], help="built-in experiments")
    pre.add_argument("name", choices=["fig1"])
    pre.add_argument("--d", type=float, default=0.1, help="signal diffusivity D")
    pre.add_argument("--emit-config", action="store_true", help="print the preset config and exit")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "preset":
            cfg = fig1_config(args.d)
            if args.seed is not None:
                cfg = cfg.with_seed(args.seed)
            if args.emit_config:
                sys.stdout.write(format_config(cfg))
                return EXIT_OK
            return cmd_run(cfg, args.out, args.quiet)
        text = args.config.read_text()
        if args.command == "sweep":
            sweep = parse_sweep(text)
            if args.seed is not None:
                sweep = replace(sweep, base=sweep.base.with_seed(args.seed))
            cmd_sweep(sweep, args.out, args.workers, args.quiet)
            return EXIT_OK
        cfg = parse_config(text)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.command == "stability":
            cmd_stability(cfg, args.out, args.quiet)
            return EXIT_OK
        return cmd_run(cfg, args.out, args.quiet)
    except CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

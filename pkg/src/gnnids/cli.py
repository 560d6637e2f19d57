"""Command-line entry point.

    gnnids run --config exp.ini --out results/
    gnnids train --config exp.ini --out results/      # one stage
    gnnids --stage train --config exp.ini --out results/
"""
from __future__ import annotations

import argparse
import sys

from . import pipeline
from .config import ConfigError, load_config


def _common(p: argparse.ArgumentParser, top: bool = False) -> None:
    # on subparsers use SUPPRESS so values given before the subcommand survive
    default = None if top else argparse.SUPPRESS
    p.add_argument("--config", default=default, help="experiment INI file")
    p.add_argument("--out", default=default, help="output directory")
    p.add_argument("--seed", type=int, default=default, help="replace every seed in the config")
    p.add_argument("--override-grids", action="store_true", default=False if top else argparse.SUPPRESS,
                   help="allow attack grid values outside the standard grids")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gnnids", description="GNN intrusion detection experiments")
    _common(ap, top=True)
    ap.add_argument("--stage", choices=pipeline.STAGES,
                    help="with no subcommand: run this one stage; with run: stop after it")
    sub = ap.add_subparsers(dest="command")
    for name in pipeline.STAGES:
        _common(sub.add_parser(name, help=f"run the {name} stage"))
    _common(sub.add_parser("run", help="run every stage in order"))
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    command = args.command or args.stage
    if command is None:
        ap.print_usage(sys.stderr)
        print("gnnids: error: give a subcommand or --stage", file=sys.stderr)
        return 2
    if not args.config or not args.out:
        print(f"gnnids: error: [{command}] --config and --out are required", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, seed=args.seed, override_grids=args.override_grids)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"gnnids: [config] {exc}", file=sys.stderr)
        return 2
    try:
        if command == "run":
            pipeline.run(cfg, args.out, until=args.stage)
        else:
            pipeline.run_stage(command, cfg, args.out)
    except pipeline.StageError as exc:
        print(f"gnnids: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

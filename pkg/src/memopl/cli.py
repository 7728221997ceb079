"""Command-line entry point: ``opl <experiment> --config FILE [--out DIR] [--seed N]``.

On failure a single line ``error: <ErrorType>: <message>`` is written to
stderr and the exit status is 1 (2 for usage errors).
"""
from __future__ import annotations

import argparse
import sys

from .config import default_config, load_config
from .experiments import COMMANDS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opl", description="Memristive retina grid experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="INI experiment config; built-in defaults when omitted")
    parser.add_argument("--out", help="output directory (overrides run.out)")
    parser.add_argument("--seed", type=int, help="random seed (overrides run.seed)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command) if args.config else default_config(args.command)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ValueError("seed must be an unsigned 64-bit integer")
            cfg = cfg.replace(run={"seed": args.seed})
        if args.out:
            cfg = cfg.replace(run={"out": args.out})
        result = COMMANDS[args.command](cfg, cfg.run.out)
    except Exception as exc:  # noqa: BLE001 - reported as one parsable line
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    metrics = result.get("metrics", result)
    for key, value in metrics.items():
        print(f"{key} = {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

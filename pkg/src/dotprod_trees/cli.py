"""Command-line entry point: one experiment per invocation."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import SUBCOMMANDS, load_config
from .errors import ConfigInvalid, DotprodError
from .runner import describe, format_plan, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dotprod-trees", description="Dot-product tree embedding counts on discrete fractal measures.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(SUBCOMMANDS) + ["describe"]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed-override", type=int, default=None)
        if name != "describe":
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "describe":
            cfg = load_config(args.config, None, args.seed_override)
            sys.stdout.write(format_plan(describe(cfg)))
            return 0
        if args.threads < 1:
            raise ConfigInvalid("--threads", "must be >= 1")
        cfg = load_config(args.config, SUBCOMMANDS[args.command], args.seed_override)
        run(cfg, args.out, args.threads)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DotprodError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

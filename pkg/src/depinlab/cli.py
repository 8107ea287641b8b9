"""``depin-lab`` command line entry point."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import COMMANDS, parse_config
from .errors import ConfigError, InconclusiveRunError, NumericalError, PinnedError
from .experiments import run

EXIT_OK, EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_NUMERICAL = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="depin-lab",
        description="Depinning of a nonlocal interface in a periodic heterogeneous medium.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--N", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--F", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--print-config", action="store_true",
                   help="print the resolved manifest and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on bad usage, which matches our validation code
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        manifest = parse_config(args.config, command=args.command, N=args.N, dt=args.dt,
                                c=args.c, F=args.F, seed=args.seed, out=args.out,
                                workers=args.workers)
        if args.print_config:
            print(manifest.to_json())
            return EXIT_OK
        summary = run(manifest)
    except (ConfigError, PinnedError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InconclusiveRunError as e:
        print(f"inconclusive: {e}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(summary, sort_keys=True, indent=2, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

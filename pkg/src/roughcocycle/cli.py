"""Command line entry point: ``roughcocycle <subcommand> --config FILE [--seed U64] [--out DIR]``."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .experiments import COMMANDS, ConfigError, load_config, run


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roughcocycle", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--seed", type=_u64, help="override master_seed")
        p.add_argument("--out", help="override out_dir")
        if name == "solve":
            p.add_argument("--field", help="vector field name (default: config field)")
            p.add_argument("--driver", choices=("bm", "smooth"), default="bm")
            p.add_argument("--delta", type=float, help="smoothing width for --driver smooth")
            p.add_argument("--xi", help="comma separated initial value")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        changes = {}
        if args.seed is not None:
            changes["master_seed"] = args.seed
        if args.out is not None:
            changes["out_dir"] = args.out
        if changes:
            cfg = dataclasses.replace(cfg, **changes)
        kwargs = {}
        if args.command == "solve":
            kwargs = dict(field_name=args.field, driver=args.driver, delta=args.delta,
                          xi=None if args.xi is None else [float(v) for v in args.xi.split(",")])
        report = run(args.command, cfg, **kwargs)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    status = "PASS" if report.all_pass else "FAIL"
    print(f"{report.name}: {status} ({report.summary})")
    for f in report.files:
        print(f"  wrote {f}")
    return 0 if report.all_pass else 1


if __name__ == "__main__":
    sys.exit(main())

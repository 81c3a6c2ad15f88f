"""Command line: ``liouskin run <experiment> ...`` and ``liouskin list``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import load_config
from .errors import LiouskinError, UnknownExperimentError
from .experiments import EXPERIMENTS, OUT_ENV, default_config, run


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"--set expects key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liouskin", description="Liouvillian skin-effect transport experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("experiment")
    r.add_argument("--config", help="YAML or JSON file with overrides (nested or dotted keys)")
    r.add_argument("--seed", type=int)
    r.add_argument("--realizations", type=int)
    r.add_argument("--out", help=f"output directory (default: ${OUT_ENV}/<experiment>, else runs/<experiment>)")
    r.add_argument("--workers", type=int, help="processes for realization-parallel ensembles")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="extra override, e.g. disorder.h=0.5")

    sub.add_parser("list", help="list experiments and their defaults")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list":
        for name, exp in EXPERIMENTS.items():
            print(f"{name:22s} {exp.description}")
        return 0

    try:
        overrides = load_config(args.config) if args.config else {}
        overrides.update(_parse_set(args.set))
        for key in ("seed", "realizations", "out", "workers"):
            val = getattr(args, key)
            if val is not None:
                overrides[key] = val
        cfg = default_config(args.experiment, overrides)
        result = run(cfg)
    except UnknownExperimentError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    except (LiouskinError, ValueError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(result.manifest['files'])} files to {result.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

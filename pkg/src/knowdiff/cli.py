"""Command-line entry point.

Examples::

    knowdiff --preset paper-531 --out runs/531
    knowdiff --config my_run.json --seeds 10 --no-charts
    knowdiff --config my_run.json --validate-only
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import List, Optional

from .config import PRESETS, check_config, preset, seeds_of, stages_of, with_defaults
from .errors import ConfigError, KnowdiffError


def validate(raw) -> List[str]:
    """All problems with a raw config, including the initial knowledge states."""
    if not isinstance(raw, dict):
        return ["<root>: configuration must be a JSON object"]
    cfg = with_defaults(raw)
    problems = [str(e) for e in check_config(cfg)]
    if problems:
        return problems
    from .runner import build_simulation
    try:
        for stage in stages_of(cfg):
            build_simulation(cfg, seeds_of(cfg)[0], stage)
    except KnowdiffError as exc:
        problems.append(f"initial state: {exc}")
    return problems


def _load_raw(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(path, f"cannot read: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(path, f"invalid JSON: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="knowdiff", description="Multilayer knowledge diffusion simulator.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH", help="JSON run configuration")
    src.add_argument("--preset", choices=sorted(PRESETS), help="bundled scenario")
    seeds = p.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, help="base seed")
    seeds.add_argument("--seeds", type=int, metavar="N", help="run N replications (seed, seed+1, ...)")
    p.add_argument("--steps", type=int, help="run horizon")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--no-charts", action="store_true", help="skip SVG charts")
    p.add_argument("--validate-only", action="store_true", help="check the configuration and exit")
    p.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = preset(args.preset) if args.preset else _load_raw(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if isinstance(raw, dict):
        raw = with_defaults(raw)
        if args.seed is not None:
            raw["engine"]["seed"] = args.seed
            raw["replication"] = {"count": 1}
        if args.seeds is not None:
            raw["replication"] = {"count": args.seeds}
        if args.steps is not None:
            raw["engine"]["steps"] = args.steps
        if args.out:
            raw["output"]["directory"] = args.out
        if args.no_charts:
            raw["output"]["charts"] = False

    problems = validate(raw)
    if args.validate_only:
        for line in problems:
            print(line)
        print("ok" if not problems else f"{len(problems)} problem(s)")
        return 0 if not problems else 1
    if problems:
        for line in problems:
            print(f"error: {line}", file=sys.stderr)
        return 2
    if args.dump_config:
        print(json.dumps(raw, indent=2, sort_keys=True))
        return 0

    from .runner import run_config
    try:
        run_config(raw, raw["output"]["directory"], charts=raw["output"]["charts"])
    except OSError as exc:
        print(f"error: {exc.filename or raw['output']['directory']}: {exc.strerror}", file=sys.stderr)
        return 3
    print(raw["output"]["directory"])
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line: ``rpp <experiment> [--config FILE] [--seed N] [--out DIR] [--threads N]``.

Extra ``--name value`` pairs set experiment parameters (values are parsed as
JSON when possible), e.g. ``rpp constants --d 3 --p 1.5``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

from ..errors import RPPError
from .config import EXPERIMENTS, ConfigError, load_config
from .runner import EXIT_ERROR, EXIT_PASS, MANIFEST, report, run_experiment


def _parse_params(extra: List[str]) -> dict:
    out = {}
    i = 0
    while i < len(extra):
        key = extra[i]
        if not key.startswith("--") or i + 1 >= len(extra):
            raise ConfigError(f"cannot parse argument {key!r}; parameters take the form --name value")
        name = key[2:].replace("-", "_")
        raw = extra[i + 1]
        try:
            out[name] = json.loads(raw)
        except json.JSONDecodeError:
            out[name] = raw
        i += 2
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rpp", description=__doc__.split("\n")[0])
    ap.add_argument("experiment", help="one of: " + ", ".join(EXPERIMENTS))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--seed", type=int, help="master seed")
    ap.add_argument("--out", help="output directory (default: out)")
    ap.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    ap.add_argument("--manifest", help="manifest to summarize (report only)")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    try:
        if args.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {args.experiment!r}; available: {', '.join(EXPERIMENTS)}")
        if args.experiment == "report":
            manifest = args.manifest or os.path.join(args.out or "out", MANIFEST)
            if not os.path.exists(manifest):
                raise ConfigError(f"manifest not found: {manifest}")
            text, _, _ = report(manifest, os.path.dirname(os.path.abspath(manifest)))
            sys.stdout.write(text)
            return EXIT_PASS
        cfg = load_config(args.config, args.experiment, args.seed, args.out, args.threads)
        params = _parse_params(extra)
        if params:
            from .config import ExperimentConfig

            merged = dict(cfg.params)
            merged.update(params)
            cfg = ExperimentConfig(cfg.experiment, merged, cfg.seed, cfg.out, cfg.threads)
        res, code = run_experiment(cfg)
    except ConfigError as exc:
        print(f"rpp: configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except RPPError as exc:
        print(f"rpp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # any other failure is an error exit, never a verdict
        print(f"rpp: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for c in res.checks:
        print(f"[{c.verdict}] {c.name}")
    print(f"{res.name}: {res.status} -> {os.path.join(cfg.out, res.name + '.json')}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command-line entry point: ``cvpc design|estimate|benchmark|reference``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .design import FitError, InfeasibleBudget
from .experiment import (CacheConflict, ConfigError, ExperimentConfig, cmd_benchmark, cmd_design,
                         cmd_estimate, cmd_reference)

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3
EXIT_CACHE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cvpc", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--workers", type=int, default=None, help="threads for per-sample solves")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="pilot, fit and solve for (p*, N*)")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("estimate", help="run the designed estimator once")
    p.add_argument("--config", required=True)
    p.add_argument("--design", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--alpha-zero", action="store_true", help="disable the control variate")

    p = sub.add_parser("benchmark", help="replicated equal-budget comparison")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--force", action="store_true", help="rebuild a conflicting reference cache")

    p = sub.add_parser("reference", help="build or check the reference cache")
    p.add_argument("--config", required=True)
    p.add_argument("--force", action="store_true")
    return parser


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ExperimentConfig.load(args.config).with_overrides(
            seed=args.seed, workers=args.workers, replications=getattr(args, "reps", None))
        if args.command == "design":
            _emit(cmd_design(cfg), args.out)
        elif args.command == "estimate":
            try:
                with open(args.design) as fh:
                    design = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read design {args.design}: {exc}") from None
            _emit(cmd_estimate(cfg, design, alpha_zero=args.alpha_zero), args.out)
        elif args.command == "benchmark":
            cmd_benchmark(cfg, args.out, force_reference=args.force)
        else:
            ref, hit = cmd_reference(cfg, force=args.force)
            state = "cache hit" if hit else "built"
            print(f"reference {state}: {cfg.reference_cache_path}")
            print("t,mean,stderr_mean,variance")
            for t, m, s, v in zip(ref["header"]["times_time_units"], ref["mean"],
                                  ref["stderr_mean"], ref["variance"]):
                print(f"{t:.17g},{m:.17g},{s:.17g},{v:.17g}")
    except InfeasibleBudget as exc:
        print(f"error: infeasible budget: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, FitError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CacheConflict as exc:
        print(f"error: cache conflict: {exc}", file=sys.stderr)
        return EXIT_CACHE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line benchmark harness: `spacetime-dd run|sweep <config>`."""

import argparse
import os
import sys

from .benchmark import run_methods, run_sweep
from .config import load_config
from .errors import ConfigError, SpacetimeDDError
from .reporting import write_run_outputs, write_sweep_csv

ENV_PREFIX = "SPACETIME_DD_"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spacetime-dd",
        description="Space-time domain decomposition benchmark runner.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run the configured interface methods"),
                           ("sweep", "evaluate a (phi, s) parameter grid")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="path to the YAML experiment config")
        p.add_argument("--out-dir", default=None,
                       help=f"output directory (overrides config and {ENV_PREFIX}OUT_DIR)")
        p.add_argument("--allow-divergence", action="store_true",
                       help="exit 0 even when a method diverges")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for sweep grid points")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed for the initial guess")
        if name == "run":
            p.add_argument("--dump-fields", action="store_true",
                           help="also write the coefficient arrays of each method")
    return parser


def _resolve_out_dir(args, config) -> str:
    if args.out_dir:
        return args.out_dir
    env = os.environ.get(ENV_PREFIX + "OUT_DIR")
    if env:
        return env
    return config.output_dir


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "run" and not config.methods:
            raise ConfigError("run requires a nonempty 'methods' list")
        if args.command == "sweep" and config.sweep is None:
            raise ConfigError("sweep requires a 'sweep' section")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = _resolve_out_dir(args, config)
    try:
        if args.command == "run":
            result = run_methods(config, seed=args.seed)
            files = write_run_outputs(out_dir, result, dump_fields=args.dump_fields)
            for path in files:
                print(path)
            for outcome in result.outcomes:
                trace = outcome.result.trace
                status = ("diverged" if trace.diverged
                          else "converged" if trace.converged else "stopped")
                print(f"{outcome.spec.name}: {status} after {trace.iterations} iterations")
            if result.any_diverged and not args.allow_divergence:
                print("divergence detected (pass --allow-divergence to ignore)",
                      file=sys.stderr)
                return 3
        else:
            rows = run_sweep(config, threads=max(1, args.threads), seed=args.seed)
            os.makedirs(out_dir, exist_ok=True)
            path = os.path.join(out_dir, "sweep.csv")
            write_sweep_csv(path, rows)
            print(path)
            if any(not r.converged for r in rows) and not args.allow_divergence:
                print("some grid points diverged (pass --allow-divergence to ignore)",
                      file=sys.stderr)
                return 3
    except SpacetimeDDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

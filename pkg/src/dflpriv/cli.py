"""Command-line entry point for the batch experiments and one-shot queries."""

from __future__ import annotations

import argparse
import json
import sys

from .adversary import CorruptionStrategy, select_corrupt
from .attacks import AttackFailedError, ReconstructionError
from .experiments import ConfigError, load_config, partition_report, run_experiment
from .graphs import EdgeListParseError, GenerationError, read_edge_list

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_NUMERIC = 4

_SUBCOMMAND_TO_EXPERIMENT = {
    "mi-curve": "mi_curve",
    "topology-attack": "topology_attack",
    "inversion": "inversion_quality",
    "consensus-check": "consensus_check",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--workers", type=int, help="parallel worker count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dflpriv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMAND_TO_EXPERIMENT:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        _add_common(cmd)
    part = sub.add_parser("partition", help="honest-partition query on an edge-list file")
    part.add_argument("edgelist", help="path to an edge-list file")
    part.add_argument("--corrupt", help="comma-separated corrupt node ids")
    part.add_argument("--strategy", choices=["degree", "random"], help="corruption strategy")
    part.add_argument("--count", type=int, help="number of nodes the strategy corrupts")
    part.add_argument("--fraction", type=float, help="fraction of nodes the strategy corrupts")
    part.add_argument("--adaptive", action="store_true", help="recompute degrees after each removal")
    part.add_argument("--seed", type=int, default=0, help="seed for randomized strategies")
    part.add_argument("--out", help="write the JSON report here instead of stdout")
    return parser


def _run_partition(args) -> int:
    with open(args.edgelist) as fh:
        g = read_edge_list(fh.read())
    if args.corrupt is not None:
        corrupt = frozenset(int(v) for v in args.corrupt.split(",") if v.strip())
    elif args.strategy is not None:
        if args.strategy == "degree":
            strategy = CorruptionStrategy.degree_targeted(
                count=args.count, fraction=args.fraction, adaptive=args.adaptive
            )
        else:
            strategy = CorruptionStrategy.uniform_random(count=args.count, fraction=args.fraction)
        corrupt = select_corrupt(g, strategy, args.seed)
    else:
        raise ConfigError("give either --corrupt ids or a --strategy with --count/--fraction")
    report = partition_report(g, corrupt)
    payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "partition":
            return _run_partition(args)
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.out is not None:
            overrides["out"] = args.out
        if args.workers is not None:
            overrides["workers"] = args.workers
        cfg = load_config(args.config, _SUBCOMMAND_TO_EXPERIMENT[args.command], overrides)
        paths = run_experiment(cfg)
        for kind, path in sorted(paths.items()):
            print(f"{kind}: {path}")
        return EXIT_OK
    except (ConfigError, EdgeListParseError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenerationError as exc:
        print(f"generation failure: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (ArithmeticError, FloatingPointError, AttackFailedError, ReconstructionError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

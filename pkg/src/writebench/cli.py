"""Command-line interface: freeze, evaluate, aggregate, selftest."""

from __future__ import annotations

import argparse
import sys

from .episodes import GeneratorConfig, Regime, freeze_episodes, generate_episode
from .policies import POLICY_NAMES
from .runner import (
    DEFAULT_BUDGETS,
    TRACKS,
    SweepConfig,
    aggregate,
    read_results,
    run_sweep,
    write_aggregate_csv,
)

ALL_REGIMES = tuple(r.value for r in Regime)


def _parse_names(raw: str, known: tuple, what: str) -> tuple:
    if raw == "all":
        return known
    names = tuple(part.strip() for part in raw.split(",") if part.strip())
    for name in names:
        if name not in known:
            raise SystemExit(f"unknown {what} {name!r} (known: {', '.join(known)})")
    return names


def _parse_budgets(raw: str) -> tuple:
    try:
        budgets = tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise SystemExit(f"budgets must be integers, got {raw!r}")
    return budgets


def _cmd_freeze(args: argparse.Namespace) -> int:
    regimes = _parse_names(args.regime, ALL_REGIMES, "regime")
    episodes = [
        generate_episode(GeneratorConfig(regime=Regime(regime), seed=args.seed + i))
        for regime in regimes
        for i in range(args.episodes)
    ]
    freeze_episodes(episodes, args.out)
    print(f"froze {len(episodes)} episodes ({len(regimes)} regime(s)) to {args.out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = SweepConfig(
        regimes=tuple(Regime(r) for r in _parse_names(args.regimes, ALL_REGIMES, "regime")),
        tracks=_parse_names(args.tracks, TRACKS, "track"),
        budgets=_parse_budgets(args.budgets),
        policies=_parse_names(args.policies, POLICY_NAMES, "policy"),
        episodes_per_condition=args.episodes_per_condition,
        base_seed=args.base_seed,
        episode_file=None if args.episodes == "auto" else args.episodes,
        output_dir=args.out_dir,
    )
    results_path, aggregate_path = run_sweep(cfg)
    print(f"per-episode results: {results_path}")
    print(f"aggregate: {aggregate_path}")
    return 0


def _cmd_aggregate(args: argparse.Namespace) -> int:
    rows = read_results(args.infile)
    write_aggregate_csv(aggregate(rows), args.out)
    print(f"aggregate: {args.out}")
    return 0


def _cmd_selftest(_args: argparse.Namespace) -> int:
    from .selftest import run_selftest

    return 0 if run_selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="writebench",
        description="Benchmark memory write policies under strict byte budgets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    freeze = sub.add_parser("freeze", help="generate episodes and freeze them to disk")
    freeze.add_argument("--regime", default="all", help="regime name, comma list, or 'all'")
    freeze.add_argument("--episodes", type=int, default=10, help="episodes per regime")
    freeze.add_argument("--seed", type=int, default=0, help="base seed (episode i uses seed+i)")
    freeze.add_argument("--out", required=True, help="output file path")
    freeze.set_defaults(func=_cmd_freeze)

    evaluate = sub.add_parser("evaluate", help="run the benchmark sweep")
    evaluate.add_argument(
        "--episodes", default="auto", help="frozen episode file, or 'auto' to generate"
    )
    evaluate.add_argument("--regimes", default="all")
    evaluate.add_argument("--tracks", default=",".join(TRACKS))
    evaluate.add_argument("--budgets", default=",".join(str(b) for b in DEFAULT_BUDGETS))
    evaluate.add_argument("--policies", default="all")
    evaluate.add_argument("--episodes-per-condition", type=int, default=10)
    evaluate.add_argument("--base-seed", type=int, default=0)
    evaluate.add_argument("--out-dir", default="results")
    evaluate.set_defaults(func=_cmd_evaluate)

    agg = sub.add_parser("aggregate", help="aggregate a per-episode results file")
    agg.add_argument("--in", dest="infile", required=True, help="per-episode JSONL file")
    agg.add_argument("--out", required=True, help="output CSV path")
    agg.set_defaults(func=_cmd_aggregate)

    selftest = sub.add_parser("selftest", help="run the built-in invariant suite")
    selftest.set_defaults(func=_cmd_selftest)
    return parser


def main(argv: list | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points: run a campaign, validate a config, or run
the small-instance oracle comparison suite."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from hetsim.harness import (
    ConfigError,
    Scenario,
    load_scenario,
    run_campaign,
    run_oracle_suite,
    scenario_to_ini,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a Monte Carlo campaign")
    run_p.add_argument("--config", help="scenario file (INI); defaults apply if omitted")
    run_p.add_argument("--drops", type=int, help="override drop count")
    run_p.add_argument("--seed", type=int, help="override master seed")
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--strategies", help="comma list, e.g. rsrp,pl,cre:6,interference")
    run_p.add_argument("--alphas", help="comma list of compensation factors")
    run_p.add_argument("--picos-per-sector", type=int, dest="picos_per_sector")
    run_p.add_argument("--workers", type=int, help="parallel drop workers")

    val_p = sub.add_parser("validate", help="resolve and print a scenario without simulating")
    val_p.add_argument("--config", required=True)

    orc_p = sub.add_parser("oracle", help="brute-force comparison suite on small instances")
    orc_p.add_argument("--instances", type=int, default=200)
    orc_p.add_argument("--seed", type=int, default=0)

    return parser


def _scenario_from_args(args) -> Scenario:
    overrides = {}
    if args.drops is not None:
        overrides["drops"] = args.drops
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.strategies is not None:
        overrides["strategies"] = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    if args.alphas is not None:
        overrides["alphas"] = tuple(float(a) for a in args.alphas.split(","))
    if args.picos_per_sector is not None:
        overrides["picos_per_sector"] = args.picos_per_sector
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.config:
        return load_scenario(args.config, overrides)
    return replace(Scenario(), **overrides).validate()


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            scenario = _scenario_from_args(args)
            report, _ = run_campaign(scenario)
            for row in report.percentile_table():
                print(
                    f"{row['strategy']} alpha={row['alpha']:g} p5={row['p5_db']:.2f} "
                    f"p50={row['p50_db']:.2f} p90={row['p90_db']:.2f} n={row['n']}"
                )
            if scenario.output_dir:
                print(f"outputs written to {scenario.output_dir}")
            return 0
        if args.command == "validate":
            scenario = load_scenario(args.config)
            print(scenario_to_ini(scenario), end="")
            return 0
        if args.command == "oracle":
            result = run_oracle_suite(instances=args.instances, seed=args.seed)
            rate = result.converged / result.instances if result.instances else 0.0
            print(
                f"instances={result.instances} converged={result.converged} "
                f"({rate:.1%}) containment_failures={result.containment_failures}"
            )
            if result.non_converged_instances:
                print(f"non-converged instance ids: {result.non_converged_instances}")
            return 1 if result.containment_failures else 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

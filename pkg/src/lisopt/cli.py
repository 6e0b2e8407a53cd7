"""Command-line entry point: run scenarios, quick sweeps, and oracle checks."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .channels import sample_channels
from .harness import (
    Scenario,
    aggregate,
    emit_outputs,
    load_scenario,
    run_scenario,
    scenario_from_pairs,
)
from .solver import alternating_ee_max, exhaustive_search

_AXIS_KEYS = {"p": "sweep.p_budget_dbm", "n": "sweep.n", "snr": "sweep.snr_db"}

# Normalized tiny setup for paired alternating-vs-exhaustive checks: unit-ish
# channels so efficiencies are well away from zero at desk scale.
_ORACLE_PAIRS = {
    "k": "2", "m": "2", "b": "1",
    "sigma2_dbm": "-10", "p_budget_dbm": "-10",
    "p_c_dbm": "0", "p_n_dbm.1": "-5", "p_n_dbm.2": "5", "p_n_dbm.continuous": "15",
    "pathloss.bs_user.exponent": "0", "pathloss.bs_user.ref_loss_db": "10",
    "pathloss.bs_lis.exponent": "0", "pathloss.bs_lis.ref_loss_db": "0",
    "pathloss.lis_user.exponent": "0", "pathloss.lis_user.ref_loss_db": "0",
    "methods": "lis-1bit,exhaustive",
    "sweep.p_budget_dbm": "-10",
}


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if args.seed is not None:
        scenario.master_seed = args.seed
    if args.workers is not None:
        scenario.workers = args.workers
    return scenario


def _run_and_emit(scenario: Scenario, out_dir: str) -> int:
    rows = run_scenario(scenario)
    aggregates = aggregate(rows)
    paths = emit_outputs(rows, aggregates, scenario, out_dir)
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    for agg in aggregates:
        print(f"  {agg.method:16s} sweep={agg.sweep:10.4g} "
              f"ee={agg.mean_ee:12.6g} +/- {agg.stderr_ee:.3g} "
              f"rate={agg.mean_rate:10.6g} feas={agg.feas_rate:.0%}")
    return 0


def _cmd_run(args) -> int:
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    return _run_and_emit(scenario, args.out)


def _cmd_sweep(args) -> int:
    pairs = {}
    for item in args.set or []:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value.strip()
    pairs[_AXIS_KEYS[args.axis]] = args.values
    if args.methods:
        pairs["methods"] = args.methods
    scenario = _apply_overrides(scenario_from_pairs(pairs), args)
    return _run_and_emit(scenario, args.out)


def _cmd_oracle_check(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    gaps = []
    rng = np.random.default_rng(args.seed)
    for n in sizes:
        pairs = dict(_ORACLE_PAIRS)
        pairs["n"] = str(n)
        cfg = scenario_from_pairs(pairs).config
        size_gaps = []
        for _ in range(args.instances):
            channel_seed = int(rng.integers(2 ** 63))
            solver_seed = int(rng.integers(2 ** 63))
            channels = sample_channels(cfg, channel_seed)
            alt, _ = alternating_ee_max(channels, cfg, seed=solver_seed)
            exh = exhaustive_search(channels, cfg)
            if not (alt.feasible and exh.feasible):
                continue
            size_gaps.append((exh.ee - alt.ee) / exh.ee)
        gaps.extend(size_gaps)
        if size_gaps:
            print(f"n={n:3d}: instances={len(size_gaps)} "
                  f"median gap={np.median(size_gaps):.4%} max gap={max(size_gaps):.4%}")
        else:
            print(f"n={n:3d}: no feasible paired instances")
    if not gaps:
        print("no paired results")
        return 1
    print(f"overall: median gap={np.median(gaps):.4%} max gap={max(gaps):.4%}")
    if min(gaps) < -1e-9:
        print("ERROR: alternating solver exceeded the exhaustive oracle", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lisopt",
        description="Energy-efficiency studies for surface-assisted multi-user downlink",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario file")
    run_p.add_argument("scenario", help="path to a scenario file")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="quick sweep without a scenario file")
    sweep_p.add_argument("--axis", choices=sorted(_AXIS_KEYS), required=True,
                         help="sweep axis: p (budget dBm), n (elements), snr (dB)")
    sweep_p.add_argument("--values", required=True, help="comma-separated sweep values")
    sweep_p.add_argument("--methods", help="comma-separated methods")
    sweep_p.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="any scenario-file key, repeatable")
    sweep_p.set_defaults(func=_cmd_sweep)

    oracle_p = sub.add_parser("oracle-check",
                              help="paired alternating-vs-exhaustive gap on tiny instances")
    oracle_p.add_argument("--sizes", default="2,4,6,8", help="comma-separated element counts")
    oracle_p.add_argument("--instances", type=int, default=50)
    oracle_p.set_defaults(func=_cmd_oracle_check)

    for p in (run_p, sweep_p):
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--workers", type=int, default=None, help="concurrent cells")
    for p in (run_p, sweep_p, oracle_p):
        p.add_argument("--seed", type=int, default=None, help="master seed override")

    args = parser.parse_args(argv)
    if args.command == "oracle-check" and args.seed is None:
        args.seed = 7
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

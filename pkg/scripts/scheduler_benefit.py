#!/usr/bin/env python3
"""Quantify what the scheduler buys over random layouts on one scenario.

Runs the full genetic search on a scenario preset, then prices a batch of
seeded random assignments through the same fixed-layout evaluator, and
reports the scheduled cost as a fraction of the random mean.

Example:
    python3 scripts/scheduler_benefit.py --case 5 --random-trials 100
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from hetsched import (
    ScheduleConfig,
    WorkloadSpec,
    evaluate_assignment,
    evolve,
    generate_scenario,
    random_assignment,
    scenario_case,
    symmetrize,
)

DEFAULT_WORKLOAD = WorkloadSpec(d_pp=8, d_dp=8, c_pp=1_073_741_824, c_dp=301_989_888)


def parse_args() -> argparse.Namespace:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", type=int, default=5, help="scenario preset (default 5)")
    ap.add_argument("--seed", type=int, default=0, help="scenario and search seed")
    ap.add_argument("--pop", type=int, default=64, help="population size")
    ap.add_argument("--gens", type=int, default=1000, help="generations")
    ap.add_argument("--random-trials", type=int, default=100,
                    help="number of random layouts to price")
    ap.add_argument("--out", type=Path, default=None,
                    help="optional JSON file for the full numbers")
    return ap.parse_args()


def main() -> int:
    args = parse_args()
    g = symmetrize(generate_scenario(scenario_case(args.case, seed=args.seed)))
    w = DEFAULT_WORKLOAD
    cfg = ScheduleConfig(pop_size=args.pop, generations=args.gens,
                         local_search="ours", seed=args.seed)
    res = evolve(g, w, cfg)
    totals = []
    for child in np.random.SeedSequence(args.seed).spawn(args.random_trials):
        a = random_assignment(np.random.default_rng(child), g.n, w.d_pp, w.d_dp)
        totals.append(evaluate_assignment(g, a, w).total)
    mean = float(np.mean(totals))
    ratio = res.best_cost.total / mean
    print(f"case {args.case} seed {args.seed}")
    print(f"  scheduled : {res.best_cost.total:.4f} s "
          f"(datap {res.best_cost.datap:.4f} + pipelinep {res.best_cost.pipelinep:.4f})")
    print(f"  random    : mean {mean:.4f}  min {min(totals):.4f}  max {max(totals):.4f} "
          f"over {len(totals)} layouts")
    print(f"  ratio     : {ratio:.4f} (scheduled / random mean)")
    if args.out:
        args.out.write_text(json.dumps({
            "case": args.case,
            "seed": args.seed,
            "scheduled": res.best_cost.to_dict(),
            "scheduled_partition": [list(grp) for grp in res.best_partition.key()],
            "random_totals": totals,
            "ratio": ratio,
        }, indent=2) + "\n")
        print(f"  wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

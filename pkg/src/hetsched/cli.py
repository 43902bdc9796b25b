"""Command-line front end: generate scenarios, schedule, evaluate, compare.

Every output JSON embeds a run manifest (command echo, sha256 of each
input file, seed, version, wall-clock duration).  All commands are
deterministic for fixed inputs and seeds; only the manifest's duration
field varies between identical runs.

Exit codes: 0 success, 2 usage, 3 file system failure, 4 content
validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import __version__
from .costmodel import CostModelError
from .evaluation import (
    AssignmentError,
    compare_baselines,
    evaluate_assignment,
    load_assignment,
)
from .netmodel import (
    ProfileError,
    ScenarioError,
    generate_scenario,
    load_profile,
    load_scenario_spec,
    save_profile,
    scenario_case,
    symmetrize,
)
from .scheduler import ScheduleConfig, ScheduleError, evolve
from .workload import WorkloadError, load_workload, validate_workload

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4


@dataclass
class RunManifest:
    """Provenance block embedded in every output file."""

    command: list[str]
    inputs: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    version: str = __version__
    duration_s: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": list(self.command),
            "inputs": dict(self.inputs),
            "seed": self.seed,
            "version": self.version,
            "duration_s": self.duration_s,
        }


def _digest(path: str) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _at_least(minimum: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {value}")
        return value

    return parse


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="network profile JSON")
    p.add_argument("--workload", required=True, help="workload JSON")


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="search seed (default 0)")
    p.add_argument("--pop", type=_at_least(2), default=64, help="population size (default 64)")
    p.add_argument("--gens", type=_at_least(1), default=1000, help="generations (default 1000)")
    p.add_argument(
        "--max-passes", type=_at_least(1), default=8,
        help="local search passes per offspring (default 8)",
    )
    p.add_argument(
        "--patience", type=_at_least(1), default=None,
        help="stop after this many generations without improvement",
    )
    p.add_argument(
        "--threads", type=_at_least(1), default=1,
        help="parallel evaluation threads; never changes results",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetsched",
        description="communication-aware scheduling of pipeline+data parallel "
        "training onto heterogeneous networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scenario = sub.add_parser("scenario", help="network profile tools")
    scen_sub = scenario.add_subparsers(dest="subcommand", required=True)
    gen = scen_sub.add_parser("gen", help="generate a synthetic profile")
    gen.add_argument(
        "--case", required=True, choices=["1", "2", "3", "4", "5", "custom"],
        help="built-in case number or 'custom' with --spec",
    )
    gen.add_argument("--spec", help="scenario spec JSON (required for --case custom)")
    gen.add_argument("--seed", type=int, default=None, help="sampling seed")
    gen.add_argument("--out", required=True, help="output profile path")
    gen.set_defaults(func=cmd_scenario_gen)

    schedule = sub.add_parser("schedule", help="search for a low-cost layout")
    _add_instance_flags(schedule)
    _add_search_flags(schedule)
    schedule.add_argument(
        "--local-search", choices=["ours", "kl", "none"], default="ours",
        help="refinement flavor (default ours)",
    )
    schedule.add_argument("--out", required=True, help="result JSON path")
    schedule.add_argument("--trace", default=None, help="optional trace CSV path")
    schedule.set_defaults(func=cmd_schedule)

    evaluate = sub.add_parser("eval", help="price a fixed assignment")
    _add_instance_flags(evaluate)
    evaluate.add_argument("--assignment", required=True, help="assignment JSON")
    evaluate.set_defaults(func=cmd_eval)

    compare = sub.add_parser("compare", help="scheduled vs random baselines")
    _add_instance_flags(compare)
    _add_search_flags(compare)
    compare.add_argument(
        "--random-trials", type=_at_least(1), default=100,
        help="number of seeded random layouts (default 100)",
    )
    compare.add_argument("--out", default=None, help="optional report JSON path")
    compare.set_defaults(func=cmd_compare)
    return parser


def _write_payload(path: str, payload: dict[str, Any]) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def cmd_scenario_gen(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.monotonic()
    inputs: dict[str, str] = {}
    if args.case == "custom":
        if not args.spec:
            print("error: --case custom requires --spec", file=sys.stderr)
            return EXIT_USAGE
        spec = load_scenario_spec(args.spec)
        inputs[args.spec] = _digest(args.spec)
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
    else:
        spec = scenario_case(args.case, 0 if args.seed is None else args.seed)
    profile = generate_scenario(spec)
    manifest = RunManifest(
        command=["hetsched"] + argv,
        inputs=inputs,
        seed=spec.seed,
        duration_s=time.monotonic() - start,
    )
    save_profile(profile, args.out, extra={"manifest": manifest.to_dict()})
    return EXIT_OK


def _load_instance(args: argparse.Namespace):
    profile = load_profile(args.scenario)
    workload = load_workload(args.workload)
    g = symmetrize(profile)
    validate_workload(workload, g.n)
    return g, workload


def _search_config(args: argparse.Namespace, local_search: str) -> ScheduleConfig:
    return ScheduleConfig(
        pop_size=args.pop,
        generations=args.gens,
        local_search=local_search,
        max_passes=args.max_passes,
        seed=args.seed,
        patience=args.patience,
    )


def cmd_schedule(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.monotonic()
    g, workload = _load_instance(args)
    cfg = _search_config(args, args.local_search)
    result = evolve(g, workload, cfg, threads=args.threads)
    manifest = RunManifest(
        command=["hetsched"] + argv,
        inputs={args.scenario: _digest(args.scenario), args.workload: _digest(args.workload)},
        seed=args.seed,
        duration_s=time.monotonic() - start,
    )
    payload = {"manifest": manifest.to_dict(), **result.to_dict()}
    _write_payload(args.out, payload)
    if args.trace:
        Path(args.trace).write_text(result.trace_csv())
    print(result.best_cost.total)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.monotonic()
    g, workload = _load_instance(args)
    assignment = load_assignment(args.assignment)
    breakdown = evaluate_assignment(g, assignment, workload)
    manifest = RunManifest(
        command=["hetsched"] + argv,
        inputs={
            args.scenario: _digest(args.scenario),
            args.workload: _digest(args.workload),
            args.assignment: _digest(args.assignment),
        },
        duration_s=time.monotonic() - start,
    )
    print(json.dumps({**breakdown.to_dict(), "manifest": manifest.to_dict()}))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, argv: list[str]) -> int:
    start = time.monotonic()
    g, workload = _load_instance(args)
    cfg = _search_config(args, "ours")
    report = compare_baselines(g, workload, cfg, args.random_trials, threads=args.threads)
    manifest = RunManifest(
        command=["hetsched"] + argv,
        inputs={args.scenario: _digest(args.scenario), args.workload: _digest(args.workload)},
        seed=args.seed,
        duration_s=time.monotonic() - start,
    )
    if args.out:
        _write_payload(args.out, {"manifest": manifest.to_dict(), **report.to_dict()})
    print(report.speedup_vs_mean_random)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (
        ProfileError,
        ScenarioError,
        WorkloadError,
        CostModelError,
        ScheduleError,
        AssignmentError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

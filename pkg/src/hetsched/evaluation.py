"""Materialize, validate, and score fixed tasklet-to-device layouts.

An Assignment is the concrete grid sigma: D_dp rows (macro-batches) by
D_pp columns (pipeline stages) of device ids.  Columns hold the data
parallel groups; row i is the chain device i's macro-batch travels along
the pipeline.

Scoring a fixed assignment never re-runs the matching or stage-order
optimizers: the layout is priced exactly as given.  That keeps random
baselines honest (they get a random stage order and identity matchings)
and makes evaluate_assignment(materialize(p)) reproduce comm_cost(p) bit
for bit, since both sides share the same edge formulas and accumulation
order.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .combinatorics import PathResult
from .costmodel import (
    CostBreakdown,
    Partition,
    coarsen,
    datap_cost_group,
    pipeline_cost,
    pp_edge_seconds,
)
from .netmodel import CommGraph
from .scheduler import ScheduleConfig, ScheduleResult, evolve, random_partition
from .workload import WorkloadSpec, validate_workload


class AssignmentError(ValueError):
    """Assignment inconsistent with itself, the network, or the workload."""


@dataclass(frozen=True)
class Assignment:
    """Device grid plus the provenance of how it was chained together.

    grid[i][b] is the device running macro-batch i of stage column b.
    order[b] records which partition group became column b; matchings[b]
    lists the (left, right) device pairs bridging columns b and b+1.  The
    grid alone determines every cost; order and matchings are provenance
    and are validated against it.
    """

    grid: tuple[tuple[int, ...], ...]
    order: tuple[int, ...]
    matchings: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self) -> None:
        grid = tuple(tuple(int(d) for d in row) for row in self.grid)
        if not grid or not grid[0]:
            raise AssignmentError("grid must be non-empty")
        if len({len(row) for row in grid}) != 1:
            raise AssignmentError("grid rows must all have the same length")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "order", tuple(int(x) for x in self.order))
        object.__setattr__(
            self,
            "matchings",
            tuple(
                tuple((int(a), int(b)) for a, b in boundary) for boundary in self.matchings
            ),
        )

    @property
    def d_dp(self) -> int:
        return len(self.grid)

    @property
    def d_pp(self) -> int:
        return len(self.grid[0])

    def column(self, b: int) -> tuple[int, ...]:
        return tuple(row[b] for row in self.grid)

    def to_dict(self) -> dict[str, Any]:
        return {
            "grid": [list(row) for row in self.grid],
            "order": list(self.order),
            "matchings": [[[a, b] for a, b in boundary] for boundary in self.matchings],
        }


def assignment_from_dict(data: Any) -> Assignment:
    if not isinstance(data, dict) or "grid" not in data:
        raise AssignmentError("assignment JSON must be an object with a 'grid' key")
    grid = data["grid"]
    try:
        grid = tuple(tuple(int(d) for d in row) for row in grid)
    except (TypeError, ValueError) as exc:
        raise AssignmentError(f"grid entries must be integers: {exc}") from None
    if not grid or not grid[0]:
        raise AssignmentError("grid must be non-empty")
    cols = len(grid[0])
    order = data.get("order")
    if order is None:
        order = tuple(range(cols))
    matchings = data.get("matchings")
    if matchings is None:
        matchings = tuple(
            tuple(sorted((row[b], row[b + 1]) for row in grid)) for b in range(cols - 1)
        )
    return Assignment(grid, tuple(order), matchings)


def load_assignment(source: Any) -> Assignment:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AssignmentError(f"malformed JSON: {exc}") from None
    return assignment_from_dict(data)


def validate_assignment(a: Assignment, n: int) -> None:
    """Check bijectivity onto 0..n-1 and internal consistency."""
    seen: set[int] = set()
    for row in a.grid:
        for d in row:
            if d in seen:
                raise AssignmentError(f"duplicate device {d}")
            seen.add(d)
    if len(seen) != n:
        missing = sorted(set(range(n)) - seen)
        if missing:
            raise AssignmentError(f"missing device {missing[0]}")
        raise AssignmentError(
            f"grid holds {len(seen)} devices but the network has {n}"
        )
    if any(d < 0 or d >= n for d in seen):
        bad = sorted(d for d in seen if d < 0 or d >= n)[0]
        raise AssignmentError(f"device {bad} out of range for n={n}")
    if sorted(a.order) != list(range(a.d_pp)):
        raise AssignmentError(f"order {list(a.order)} is not a permutation of 0..{a.d_pp - 1}")
    if len(a.matchings) != a.d_pp - 1:
        raise AssignmentError(
            f"expected {a.d_pp - 1} boundary matchings, got {len(a.matchings)}"
        )
    for b, boundary in enumerate(a.matchings):
        expected = sorted((row[b], row[b + 1]) for row in a.grid)
        if sorted(boundary) != expected:
            raise AssignmentError(
                f"matching at boundary {b} does not pair the adjacent columns' rows"
            )


def materialize(g: CommGraph, p: Partition, w: WorkloadSpec) -> Assignment:
    """Lay a partition out as a concrete grid.

    Stage columns follow the optimized chain order; the first stage group
    is sorted ascending into rows, and each later column places every
    device on the row of its matched predecessor, so rows are chains
    through the stored bottleneck matchings.
    """
    validate_workload(w, g.n)
    cg = coarsen(g, p, w)
    _, path = pipeline_cost(cg)
    pi = path.order
    cols: list[list[int]] = [sorted(p.groups[pi[0]])]
    for b in range(1, len(pi)):
        prev_gi, cur_gi = pi[b - 1], pi[b]
        lo, hi = min(prev_gi, cur_gi), max(prev_gi, cur_gi)
        pairs = cg.matchings[(lo, hi)].pairs
        lo_devs = sorted(p.groups[lo])
        hi_devs = sorted(p.groups[hi])
        if prev_gi == lo:
            step = {lo_devs[r]: hi_devs[c] for r, c in enumerate(pairs)}
        else:
            step = {hi_devs[c]: lo_devs[r] for r, c in enumerate(pairs)}
        cols.append([step[d] for d in cols[-1]])
    grid = tuple(tuple(cols[b][i] for b in range(len(cols))) for i in range(len(cols[0])))
    matchings = tuple(
        tuple(sorted(zip(cols[b], cols[b + 1]))) for b in range(len(cols) - 1)
    )
    a = Assignment(grid, tuple(int(x) for x in pi), matchings)
    validate_assignment(a, g.n)
    return a


def evaluate_assignment(g: CommGraph, a: Assignment, w: WorkloadSpec) -> CostBreakdown:
    """Price a fixed layout: no re-matching, no stage reordering.

    Pipeline boundaries advance at their slowest row; boundary costs
    accumulate right to left like the path solver, so a materialized
    layout reproduces its partition's cost exactly.
    """
    validate_assignment(a, g.n)
    validate_workload(w, g.n)
    if a.d_dp != w.d_dp or a.d_pp != w.d_pp:
        raise AssignmentError(
            f"grid shape {a.d_dp}x{a.d_pp} does not match workload "
            f"{w.d_dp}x{w.d_pp}"
        )
    per_col = tuple(datap_cost_group(g, a.column(b), w) for b in range(a.d_pp))
    datap = max(per_col)
    boundary: list[float] = []
    for b in range(a.d_pp - 1):
        worst = 0.0
        for row in a.grid:
            u, v = row[b], row[b + 1]
            c = float(pp_edge_seconds(g.lat[u, v], g.bw[u, v], w.c_pp))
            if c > worst:
                worst = c
        boundary.append(worst)
    pipelinep = 0.0
    for b in range(len(boundary) - 1, -1, -1):
        pipelinep = boundary[b] + pipelinep
    return CostBreakdown(
        datap=datap,
        pipelinep=pipelinep,
        total=datap + pipelinep,
        per_group_datap=per_col,
        pipeline_order=PathResult(tuple(range(a.d_pp)), pipelinep),
    )


def random_assignment(rng: np.random.Generator, n: int, d_pp: int, d_dp: int) -> Assignment:
    """Unoptimized baseline: random groups, random stage order, identity
    matchings (i-th member of one sorted column pairs with the i-th of the
    next)."""
    p = random_partition(rng, n, d_pp, d_dp)
    pi = tuple(int(x) for x in rng.permutation(d_pp))
    cols = [sorted(p.groups[gi]) for gi in pi]
    grid = tuple(tuple(cols[b][i] for b in range(d_pp)) for i in range(d_dp))
    matchings = tuple(
        tuple(sorted(zip(cols[b], cols[b + 1]))) for b in range(d_pp - 1)
    )
    return Assignment(grid, pi, matchings)


@dataclass(frozen=True)
class ComparisonReport:
    """Scheduled layout versus unoptimized random layouts (and the KL ablation)."""

    scheduled: CostBreakdown
    scheduled_partition: Partition
    random_min: float
    random_mean: float
    random_max: float
    random_count: int
    random_totals: tuple[float, ...]
    kl_total: float | None
    speedup_vs_mean_random: float
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "scheduled": self.scheduled.to_dict(),
            "scheduled_partition": [list(grp) for grp in self.scheduled_partition.key()],
            "random": {
                "min": self.random_min,
                "mean": self.random_mean,
                "max": self.random_max,
                "count": self.random_count,
                "totals": list(self.random_totals),
            },
            "kl_total": self.kl_total,
            "speedup_vs_mean_random": self.speedup_vs_mean_random,
            "seed": self.seed,
        }


def compare_baselines(
    g: CommGraph,
    w: WorkloadSpec,
    cfg: ScheduleConfig,
    random_trials: int,
    threads: int = 1,
) -> ComparisonReport:
    """Scheduled (Ours), the KL ablation, and seeded random layouts.

    Random trial t draws from PCG64 seeded by SeedSequence(cfg.seed) child
    t, so results do not depend on execution order or thread count.
    """
    if random_trials < 1:
        raise AssignmentError(f"random_trials must be >= 1, got {random_trials}")
    validate_workload(w, g.n)
    scheduled = evolve(g, w, replace(cfg, local_search="ours"), threads=threads)
    kl = evolve(g, w, replace(cfg, local_search="kl"), threads=threads)
    children = np.random.SeedSequence(cfg.seed).spawn(random_trials)

    def one_trial(child) -> float:
        rng = np.random.Generator(np.random.PCG64(child))
        a = random_assignment(rng, g.n, w.d_pp, w.d_dp)
        return evaluate_assignment(g, a, w).total

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            totals = tuple(pool.map(one_trial, children))
    else:
        totals = tuple(one_trial(c) for c in children)
    mean = float(np.mean(totals))
    return ComparisonReport(
        scheduled=scheduled.best_cost,
        scheduled_partition=scheduled.best_partition,
        random_min=min(totals),
        random_mean=mean,
        random_max=max(totals),
        random_count=random_trials,
        random_totals=totals,
        kl_total=kl.best_cost.total,
        speedup_vs_mean_random=mean / scheduled.best_cost.total,
        seed=cfg.seed,
    )

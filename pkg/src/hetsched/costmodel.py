"""Bi-level communication cost of a balanced device partition.

A partition splits N devices into D_pp groups of D_dp.  Each group forms
one data parallel ring (gradient traffic c_dp bytes, shared by the D_dp
replicas); the groups themselves are chained into a pipeline (activation
traffic c_pp bytes per adjacent pair).  The two levels are charged
separately:

* data parallel: within a group, every device talks to every other; the
  group pays for its slowest member, and the model pays for the slowest
  group.
* pipeline parallel: adjacent groups are bridged by a bottleneck perfect
  matching (each device forwards to exactly one device of the next stage),
  and the stage order is chosen by an open-loop TSP over the coarsened
  group graph.

All costs are seconds.  The scalar-vs-vectorized pair helpers below are
the single source of each edge formula, so a cost computed here and a cost
recomputed from a materialized layout agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np

from .combinatorics import (
    MatchingResult,
    PathResult,
    bottleneck_perfect_matching,
    bottleneck_value,
    open_loop_tsp,
)
from .netmodel import CommGraph
from .workload import WorkloadSpec, validate_workload

MAX_BRUTE_FORCE_DEVICES = 8


class CostModelError(ValueError):
    """Partition inconsistent with the network or the workload."""


@dataclass(frozen=True)
class Partition:
    """Balanced partition of devices 0..N-1 into equally sized groups.

    Groups are stored with members ascending; group order is preserved as
    given (it is irrelevant to the cost but meaningful to callers that
    track group identity).
    """

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        groups = tuple(tuple(sorted(int(d) for d in grp)) for grp in self.groups)
        if not groups or not groups[0]:
            raise CostModelError("partition needs at least one non-empty group")
        sizes = {len(grp) for grp in groups}
        if len(sizes) != 1:
            raise CostModelError(
                f"unbalanced groups: sizes {sorted(len(g) for g in groups)}"
            )
        flat = sorted(d for grp in groups for d in grp)
        if flat != list(range(len(flat))):
            raise CostModelError(
                "groups must be disjoint and cover devices 0..N-1 exactly"
            )
        object.__setattr__(self, "groups", groups)

    @property
    def n(self) -> int:
        return self.d_pp * self.d_dp

    @property
    def d_pp(self) -> int:
        return len(self.groups)

    @property
    def d_dp(self) -> int:
        return len(self.groups[0])

    def canonical(self) -> "Partition":
        """Same partition with groups ordered by their smallest member."""
        return Partition(tuple(sorted(self.groups)))

    def key(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(self.groups))

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[int]]) -> "Partition":
        return cls(tuple(tuple(grp) for grp in groups))


@dataclass(frozen=True)
class CoarsenedGraph:
    """Pipeline-level view: one vertex per group, bottleneck edge weights.

    matchings[(j, j2)] (j < j2) pairs the sorted members of group j (rows)
    with those of group j2 (columns); edge_cost[j, j2] is its bottleneck.
    """

    edge_cost: np.ndarray
    matchings: dict[tuple[int, int], MatchingResult]

    @property
    def k(self) -> int:
        return self.edge_cost.shape[0]


@dataclass(frozen=True)
class CostBreakdown:
    """comm cost split into its two levels; total = datap + pipelinep."""

    datap: float
    pipelinep: float
    total: float
    per_group_datap: tuple[float, ...]
    pipeline_order: PathResult

    def to_dict(self) -> dict:
        return {
            "datap": self.datap,
            "pipelinep": self.pipelinep,
            "total": self.total,
            "per_group_datap": list(self.per_group_datap),
            "pipeline_order": list(self.pipeline_order.order),
        }


def dp_pair_seconds(lat, bw, c_dp: float, d_dp: int):
    """Gradient exchange time between two ring members (scalar or array)."""
    return 2.0 * (lat + (8.0 * c_dp) / (d_dp * bw))


def pp_edge_seconds(lat, bw, c_pp: float):
    """Activation forward+backward time across one pipeline boundary edge."""
    return 2.0 * (lat + (8.0 * c_pp) / bw)


def _check_partition(p: Partition, g: CommGraph, w: WorkloadSpec) -> None:
    if p.n != g.n:
        raise CostModelError(f"partition covers {p.n} devices but the network has {g.n}")
    if p.d_pp != w.d_pp or p.d_dp != w.d_dp:
        raise CostModelError(
            f"partition shape {p.d_pp}x{p.d_dp} does not match workload "
            f"{w.d_pp}x{w.d_dp}"
        )


def datap_cost_group(g: CommGraph, group: Iterable[int], w: WorkloadSpec) -> float:
    """Seconds the slowest member of one data parallel group spends syncing."""
    devs = sorted(int(d) for d in group)
    if len(set(devs)) != len(devs):
        raise CostModelError(f"duplicate device in group {devs}")
    if len(devs) != w.d_dp:
        raise CostModelError(f"group size {len(devs)} does not match d_dp {w.d_dp}")
    if devs and (devs[0] < 0 or devs[-1] >= g.n):
        raise CostModelError(f"device out of range in group {devs}")
    if len(devs) == 1:
        return 0.0
    idx = np.asarray(devs)
    m = dp_pair_seconds(g.lat[np.ix_(idx, idx)], g.bw[np.ix_(idx, idx)], w.c_dp, w.d_dp)
    np.fill_diagonal(m, 0.0)
    return float(m.sum(axis=1).max())


def datap_cost(g: CommGraph, p: Partition, w: WorkloadSpec) -> tuple[float, tuple[float, ...]]:
    """Data parallel level: slowest group, plus the per-group values."""
    _check_partition(p, g, w)
    per_group = tuple(datap_cost_group(g, grp, w) for grp in p.groups)
    return max(per_group), per_group


def pp_pair_matrix(g: CommGraph, group_a, group_b, c_pp: float) -> np.ndarray:
    """Edge costs between two groups: rows follow sorted(group_a), columns
    sorted(group_b)."""
    a = np.asarray(sorted(group_a))
    b = np.asarray(sorted(group_b))
    return pp_edge_seconds(g.lat[np.ix_(a, b)], g.bw[np.ix_(a, b)], c_pp)


def coarsen(g: CommGraph, p: Partition, w: WorkloadSpec) -> CoarsenedGraph:
    """Collapse each group to a vertex; edges carry the bottleneck matching."""
    _check_partition(p, g, w)
    k = p.d_pp
    edge = np.zeros((k, k))
    matchings: dict[tuple[int, int], MatchingResult] = {}
    for j in range(k):
        for j2 in range(j + 1, k):
            res = bottleneck_perfect_matching(pp_pair_matrix(g, p.groups[j], p.groups[j2], w.c_pp))
            edge[j, j2] = edge[j2, j] = res.bottleneck
            matchings[(j, j2)] = res
    return CoarsenedGraph(edge, matchings)


def _coarse_edge_costs(g: CommGraph, p: Partition, w: WorkloadSpec) -> np.ndarray:
    # Hot path for search loops: bottleneck values only, no pairings.
    k = p.d_pp
    edge = np.zeros((k, k))
    for j in range(k):
        for j2 in range(j + 1, k):
            v = bottleneck_value(pp_pair_matrix(g, p.groups[j], p.groups[j2], w.c_pp))
            edge[j, j2] = edge[j2, j] = v
    return edge


def pipeline_cost(cg: CoarsenedGraph, heuristic: bool = False) -> tuple[float, PathResult]:
    """Pipeline level: cheapest open chain through the coarsened graph."""
    res = open_loop_tsp(cg.edge_cost, heuristic=heuristic)
    return res.total, res


def comm_cost(g: CommGraph, p: Partition, w: WorkloadSpec, heuristic: bool = False) -> CostBreakdown:
    """Full bi-level cost of one balanced partition."""
    validate_workload(w, g.n)
    _check_partition(p, g, w)
    dp_total, per_group = datap_cost(g, p, w)
    pr = open_loop_tsp(_coarse_edge_costs(g, p, w), heuristic=heuristic)
    return CostBreakdown(
        datap=dp_total,
        pipelinep=pr.total,
        total=dp_total + pr.total,
        per_group_datap=per_group,
        pipeline_order=pr,
    )


def _balanced_partitions(devices: tuple[int, ...], d_dp: int):
    # Anchor each group at the smallest unplaced device, so every partition
    # appears exactly once and already in canonical group order.
    if not devices:
        yield ()
        return
    head, rest = devices[0], devices[1:]
    for partners in combinations(rest, d_dp - 1):
        taken = set(partners)
        remaining = tuple(d for d in rest if d not in taken)
        for tail in _balanced_partitions(remaining, d_dp):
            yield ((head,) + partners,) + tail


def brute_force_best(g: CommGraph, w: WorkloadSpec) -> tuple[Partition, CostBreakdown]:
    """Exhaustive optimum over all balanced partitions (small N only).

    Ties resolve to the lexicographically smallest canonical encoding.
    """
    validate_workload(w, g.n)
    if g.n > MAX_BRUTE_FORCE_DEVICES:
        raise CostModelError(
            f"exhaustive search is limited to {MAX_BRUTE_FORCE_DEVICES} devices, got {g.n}"
        )
    best_p: Partition | None = None
    best_cb: CostBreakdown | None = None
    for groups in _balanced_partitions(tuple(range(g.n)), w.d_dp):
        p = Partition(groups)
        cb = comm_cost(g, p, w)
        if best_cb is None or cb.total < best_cb.total or (
            cb.total == best_cb.total and p.key() < best_p.key()
        ):
            best_p, best_cb = p, cb
    assert best_p is not None and best_cb is not None
    return best_p, best_cb

"""Exact solvers for the two inner combinatorial subproblems.

* Bottleneck perfect matching on a square cost matrix: minimize the largest
  selected entry.  Solved by binary searching the sorted distinct entries
  and testing feasibility with augmenting paths, which keeps the whole
  coarsening step polynomial.
* Open-loop traveling salesman (minimum-cost Hamiltonian path, endpoints
  free): solved exactly with Held-Karp dynamic programming up to
  MAX_EXACT_TSP vertices, and by nearest-neighbor plus 2-opt beyond that
  when explicitly allowed.

Both solvers break ties deterministically: the matching returns the
lexicographically smallest optimal pairing (row 0's column first), the path
solver the lexicographically smallest vertex sequence among those reaching
the minimal float total.  A sequence and its reverse sum the same edge
weights in opposite order, which can differ in the last bits; the cheaper
float direction wins, and only exact ties canonicalize the orientation
(smaller endpoint first).

Path totals everywhere accumulate right to left (see path_cost), so a
solver total and a total recomputed from the returned order compare equal,
not merely close.  Each solver has a brute-force companion that enumerates
permutations outright; the pair is kept in this module so equivalence can
be checked at any time on small inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

MAX_EXACT_TSP = 16
MAX_BRUTE_FORCE = 10


@dataclass(frozen=True)
class MatchingResult:
    """pairs[row] = matched column; bottleneck = largest selected entry."""

    pairs: tuple[int, ...]
    bottleneck: float


@dataclass(frozen=True)
class PathResult:
    """Vertex sequence of an open path and its total edge cost in seconds."""

    order: tuple[int, ...]
    total: float


def _checked_square(a, what: str) -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        raise ValueError(f"{what} must be non-empty")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{what} must be finite")
    if np.any(m < 0):
        raise ValueError(f"{what} must be nonnegative")
    return m


def path_cost(weights, order) -> float:
    """Total cost of visiting `order`, accumulated right to left.

    The accumulation direction matters only in the last bits of the float;
    it is fixed here so independently computed totals for the same order
    are identical, which the equivalence tests rely on.
    """
    w = np.asarray(weights, dtype=float).tolist()
    total = 0.0
    for i in range(len(order) - 2, -1, -1):
        total = w[order[i]][order[i + 1]] + total
    return total


# ---------------------------------------------------------------------------
# bottleneck perfect matching


def _augment(row: int, adj: list[list[int]], match_col: list[int], seen: list[bool]) -> bool:
    # Kuhn's augmenting path step: try to match `row`, recursively displacing.
    for col in adj[row]:
        if not seen[col]:
            seen[col] = True
            if match_col[col] < 0 or _augment(match_col[col], adj, match_col, seen):
                match_col[col] = row
                return True
    return False


def _perfect_matching(adj: list[list[int]], k: int) -> list[int] | None:
    """Perfect matching as a col -> row map, or None if none exists."""
    match_col = [-1] * k
    for row in range(k):
        if not _augment(row, adj, match_col, [False] * k):
            return None
    return match_col


def _optimal_threshold(w: np.ndarray) -> tuple[float, list[list[int]]]:
    # Binary search the sorted distinct entries for the smallest threshold
    # that still admits a perfect matching.  The full matrix is always
    # feasible, so the search is well defined.
    k = w.shape[0]
    values = np.unique(w)
    lo, hi = 0, len(values) - 1
    best_adj: list[list[int]] | None = None
    while lo < hi:
        mid = (lo + hi) // 2
        adj = [np.nonzero(w[r] <= values[mid])[0].tolist() for r in range(k)]
        if _perfect_matching(adj, k) is not None:
            hi = mid
            best_adj = adj
        else:
            lo = mid + 1
    bottleneck = float(values[lo])
    if best_adj is None:
        best_adj = [np.nonzero(w[r] <= bottleneck)[0].tolist() for r in range(k)]
    return bottleneck, best_adj


def bottleneck_value(costs) -> float:
    """Optimal bottleneck alone; cheaper than extracting a pairing."""
    w = _checked_square(costs, "cost matrix")
    return _optimal_threshold(w)[0]


def bottleneck_perfect_matching(costs) -> MatchingResult:
    """Perfect matching minimizing the largest selected entry.

    Binary search over the sorted distinct entries finds the optimal
    bottleneck; a row-by-row greedy pass then extracts the lexicographically
    smallest pairing among matchings that stay within it.
    """
    w = _checked_square(costs, "cost matrix")
    bottleneck, adj = _optimal_threshold(w)
    pairs = _lex_smallest_pairing(adj, w.shape[0])
    return MatchingResult(tuple(pairs), bottleneck)


def _lex_smallest_pairing(adj: list[list[int]], k: int) -> list[int]:
    # Fix rows in order; for each, take the smallest column that still lets
    # the later rows finish a perfect matching within the same threshold.
    # Feasibility of a candidate is decided by rerouting the matching at
    # hand (at most one augmenting path per attempt), not from scratch.
    match_col = _perfect_matching(adj, k)
    assert match_col is not None, "threshold from the binary search must be feasible"
    match_row = [-1] * k
    for col, row in enumerate(match_col):
        match_row[row] = col
    fixed_cols: set[int] = set()
    pairs = [-1] * k
    for row in range(k):
        chosen = -1
        for col in adj[row]:
            if col in fixed_cols:
                continue
            if match_row[row] == col:
                chosen = col
                break
            # Tentatively give `col` to `row`; its previous owner must then
            # find a replacement among the free and reroutable columns.
            displaced = match_col[col]
            old_col = match_row[row]
            match_col[col] = row
            match_col[old_col] = -1
            seen = [False] * k
            seen[col] = True
            for fc in fixed_cols:
                seen[fc] = True
            if _augment(displaced, adj, match_col, seen):
                chosen = col
                match_row = [-1] * k
                for c2, r2 in enumerate(match_col):
                    if r2 >= 0:
                        match_row[r2] = c2
                break
            match_col[old_col] = row
            match_col[col] = displaced
        assert chosen >= 0, "every row has a feasible column at the optimal bottleneck"
        pairs[row] = chosen
        fixed_cols.add(chosen)
    return pairs


def brute_force_bottleneck_matching(costs) -> MatchingResult:
    """Enumerate all k! pairings; independent oracle for small k."""
    w = _checked_square(costs, "cost matrix")
    k = w.shape[0]
    if k > MAX_BRUTE_FORCE:
        raise ValueError(f"brute force is limited to k <= {MAX_BRUTE_FORCE}, got {k}")
    rows = list(range(k))
    best: tuple[int, ...] | None = None
    best_val = np.inf
    for perm in permutations(range(k)):
        val = max(float(w[r][perm[r]]) for r in rows)
        if val < best_val:
            best_val = val
            best = perm
    assert best is not None
    return MatchingResult(tuple(best), best_val)


# ---------------------------------------------------------------------------
# open-loop TSP


@lru_cache(maxsize=4)
def _subset_members(k: int) -> list[list[int]]:
    # members[s] lists the set bits of s ascending; the lowest bit prepends
    # onto the members of the remaining mask, so no sort is needed.
    members: list[list[int]] = [[] for _ in range(1 << k)]
    for s in range(1, 1 << k):
        v = s & -s
        members[s] = [v.bit_length() - 1] + members[s ^ v]
    return members


def _checked_symmetric(weights) -> np.ndarray:
    w = _checked_square(weights, "weight matrix")
    if not np.array_equal(w, w.T):
        raise ValueError("weight matrix must be symmetric")
    return w


def open_loop_tsp(weights, heuristic: bool = False) -> PathResult:
    """Minimum-cost path visiting every vertex once, endpoints free.

    Exact (Held-Karp) up to MAX_EXACT_TSP vertices.  Beyond that the call
    fails unless heuristic=True, which switches to deterministic
    nearest-neighbor construction plus 2-opt refinement.
    """
    w = _checked_symmetric(weights)
    k = w.shape[0]
    if k == 1:
        return PathResult((0,), 0.0)
    if k > MAX_EXACT_TSP:
        if not heuristic:
            raise ValueError(
                f"exact path search is limited to {MAX_EXACT_TSP} vertices, got {k}; "
                "pass heuristic=True to accept an approximate tour"
            )
        return _nn_two_opt(w)
    return _held_karp(w)


def _held_karp(w: np.ndarray) -> PathResult:
    """h[S][u] = cheapest path that starts at u and visits exactly set S."""
    k = w.shape[0]
    rows = w.tolist()
    members = _subset_members(k)
    full = (1 << k) - 1
    inf = np.inf
    h = [[inf] * k for _ in range(1 << k)]
    for u in range(k):
        h[1 << u][u] = 0.0
    for s in range(3, full + 1):
        if s & (s - 1) == 0:
            continue
        hs = h[s]
        for u in members[s]:
            r = s ^ (1 << u)
            hr = h[r]
            wu = rows[u]
            best = inf
            for v in members[r]:
                c = wu[v] + hr[v]
                if c < best:
                    best = c
            hs[u] = best
    total = min(h[full])
    start = h[full].index(total)
    # Walk forward, always taking the smallest next vertex that still meets
    # the DP value; this reconstructs the lexicographically smallest optimal
    # sequence (ties included) because h is exactly the realized suffix cost.
    order = [start]
    s = full ^ (1 << start)
    target = total
    cur = start
    while s:
        for u in members[s]:
            if rows[cur][u] + h[s][u] == target:
                order.append(u)
                target = h[s][u]
                cur = u
                s ^= 1 << u
                break
        else:
            raise AssertionError("DP table inconsistent with its own recurrence")
    return PathResult(tuple(order), total)


def _nn_two_opt(w: np.ndarray) -> PathResult:
    k = w.shape[0]
    best_order: list[int] | None = None
    best_total = np.inf
    for start in range(k):
        left = set(range(k)) - {start}
        order = [start]
        while left:
            cur = order[-1]
            nxt = min(left, key=lambda v: (w[cur][v], v))
            order.append(nxt)
            left.remove(nxt)
        order = _two_opt(w, order)
        total = path_cost(w, order)
        if total < best_total:
            best_total = total
            best_order = order
    assert best_order is not None
    if best_order[0] > best_order[-1]:
        best_order.reverse()
    return PathResult(tuple(best_order), path_cost(w, best_order))


def _two_opt(w: np.ndarray, order: list[int]) -> list[int]:
    # First-improvement 2-opt for open paths: reverse order[i:j+1] whenever
    # that lowers the two boundary edges (path ends count as free edges).
    k = len(order)
    improved = True
    while improved:
        improved = False
        for i in range(k - 1):
            for j in range(i + 1, k):
                before = 0.0
                after = 0.0
                if i > 0:
                    before += w[order[i - 1]][order[i]]
                    after += w[order[i - 1]][order[j]]
                if j < k - 1:
                    before += w[order[j]][order[j + 1]]
                    after += w[order[i]][order[j + 1]]
                if after < before:
                    order[i : j + 1] = reversed(order[i : j + 1])
                    improved = True
    return order


def brute_force_open_loop_tsp(weights) -> PathResult:
    """Try every directed vertex sequence; independent oracle for small k."""
    w = _checked_symmetric(weights)
    k = w.shape[0]
    if k > MAX_BRUTE_FORCE:
        raise ValueError(f"brute force is limited to k <= {MAX_BRUTE_FORCE}, got {k}")
    if k == 1:
        return PathResult((0,), 0.0)
    best: tuple[int, ...] | None = None
    best_total = np.inf
    for perm in permutations(range(k)):
        total = path_cost(w, perm)
        if total < best_total:
            best_total = total
            best = perm
    assert best is not None
    return PathResult(best, best_total)

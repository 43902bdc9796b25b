"""Hybrid genetic search over balanced partitions.

The true bi-level cost is expensive (matchings plus a path DP per call),
so within a refinement pass moves are scored by a cheap per-pair surrogate
weight.  Every pass's outcome is then priced with the true cost model, and
the best truly-priced configuration seen is what survives; the surrogate
can therefore explore aggressively without ever degrading the result.

Two refinement flavors are provided.  "ours" examines, for each group
pair, only swaps involving the fastest intra-group edge of either side,
scored by the expected change in pipeline boundary cost, plus a circular
extension that chains tentative swaps around the groups and keeps the best
prefix.  "kl" is the classical Kernighan-Lin style cut-weight gain.
"""

from __future__ import annotations

from bisect import insort
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .costmodel import CostBreakdown, Partition, comm_cost
from .netmodel import CommGraph
from .workload import WorkloadSpec, validate_workload

LOCAL_SEARCH_KINDS = ("ours", "kl", "none")


class ScheduleError(ValueError):
    """Invalid scheduler configuration or arguments."""


@dataclass(frozen=True)
class ScheduleConfig:
    pop_size: int = 64
    generations: int = 1000
    local_search: str = "ours"
    max_passes: int = 8
    seed: int = 0
    patience: int | None = None

    def __post_init__(self) -> None:
        if self.pop_size < 2:
            raise ScheduleError(f"pop_size must be >= 2, got {self.pop_size}")
        if self.generations < 1:
            raise ScheduleError(f"generations must be >= 1, got {self.generations}")
        if self.max_passes < 1:
            raise ScheduleError(f"max_passes must be >= 1, got {self.max_passes}")
        kind = str(self.local_search).lower()
        if kind not in LOCAL_SEARCH_KINDS:
            raise ScheduleError(
                f"local_search must be one of {LOCAL_SEARCH_KINDS}, got {self.local_search!r}"
            )
        object.__setattr__(self, "local_search", kind)
        if self.patience is not None and self.patience < 1:
            raise ScheduleError(f"patience must be >= 1 when set, got {self.patience}")


@dataclass(frozen=True)
class SurrogateWeights:
    """Per-pair pessimism: w[d][d2] = lat + 8*(c_pp + c_dp)/bw.

    One number standing in for how much a link hurts whichever traffic
    class ends up crossing it; symmetric with a zero diagonal.
    """

    w: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ScheduleError(f"surrogate weights must be square, got shape {w.shape}")
        if not np.array_equal(w, w.T):
            raise ScheduleError("surrogate weights must be symmetric")
        if np.any(w < 0) or np.any(np.diagonal(w) != 0):
            raise ScheduleError("surrogate weights must be nonnegative with a zero diagonal")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_instance(cls, g: CommGraph, workload: WorkloadSpec) -> "SurrogateWeights":
        w = g.lat + (8.0 * (workload.c_pp + workload.c_dp)) / g.bw
        w = w.copy()
        np.fill_diagonal(w, 0.0)
        return cls(w)


@dataclass(frozen=True)
class ScheduleResult:
    best_partition: Partition
    best_cost: CostBreakdown
    trace: tuple[tuple[int, float, float], ...]
    evaluations: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "partition": [list(grp) for grp in self.best_partition.key()],
            "cost": self.best_cost.to_dict(),
            "trace": [[gen, best, mean] for gen, best, mean in self.trace],
            "evaluations": self.evaluations,
            "seed": self.seed,
        }

    def trace_csv(self) -> str:
        lines = ["generation,best_cost_s,mean_cost_s"]
        lines.extend(f"{gen},{best!r},{mean!r}" for gen, best, mean in self.trace)
        return "\n".join(lines) + "\n"


def random_partition(rng: np.random.Generator, n: int, d_pp: int, d_dp: int) -> Partition:
    """Uniform shuffle of device ids chunked into d_pp groups of d_dp."""
    if d_pp * d_dp != n:
        raise ScheduleError(f"d_pp*d_dp = {d_pp * d_dp} does not cover {n} devices")
    perm = rng.permutation(n)
    return Partition(
        tuple(tuple(int(d) for d in perm[j * d_dp : (j + 1) * d_dp]) for j in range(d_pp))
    )


def init_population(
    g: CommGraph,
    w: WorkloadSpec,
    cfg: ScheduleConfig,
    rng: np.random.Generator | None = None,
) -> list[Partition]:
    """cfg.pop_size seeded random balanced partitions."""
    validate_workload(w, g.n)
    if cfg.pop_size < 2:
        raise ScheduleError(f"pop_size must be >= 2, got {cfg.pop_size}")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
    return [random_partition(rng, g.n, w.d_pp, w.d_dp) for _ in range(cfg.pop_size)]


def crossover(p1: Partition, p2: Partition, rng: np.random.Generator) -> Partition:
    """Inject part of one of p2's groups into the same slot of p1.

    A group index j and a nonempty subset S of p2's group j that p1's group
    j lacks are drawn; each device of S moves into offspring group j, and
    per incomer one not-yet-evicted original member of group j is pushed
    out to the group the incomer came from, preserving balance.  The slot
    is drawn among groups where p2 actually differs, so identical parents
    are the only case that yields a plain copy.
    """
    if p1.d_pp != p2.d_pp or p1.d_dp != p2.d_dp:
        raise ScheduleError(
            f"parents must share a shape, got {p1.d_pp}x{p1.d_dp} and {p2.d_pp}x{p2.d_dp}"
        )
    diffs = [sorted(set(p2.groups[jj]) - set(p1.groups[jj])) for jj in range(p1.d_pp)]
    slots = [jj for jj in range(p1.d_pp) if diffs[jj]]
    if not slots:
        return Partition(p1.groups)
    j = slots[int(rng.integers(len(slots)))]
    diff = diffs[j]
    m = int(rng.integers(1, len(diff) + 1))
    picked = rng.choice(len(diff), size=m, replace=False)
    incoming = [diff[i] for i in sorted(int(x) for x in picked)]
    groups = [list(grp) for grp in p1.groups]
    home = {d: gi for gi, grp in enumerate(groups) for d in grp}
    evict_pool = list(groups[j])
    for d in incoming:
        src = home[d]
        groups[src].remove(d)
        insort(groups[j], d)
        home[d] = j
        victim = evict_pool.pop(int(rng.integers(len(evict_pool))))
        groups[j].remove(victim)
        insort(groups[src], victim)
        home[victim] = src
    return Partition.from_groups(groups)


# ---------------------------------------------------------------------------
# surrogate gains


def gain_ours(
    sw: SurrogateWeights,
    p: Partition,
    j: int,
    j2: int,
    cand: tuple[int, int, int, int],
) -> float:
    """Predicted improvement for swapping cand's d1 (group j) with d1' (j2).

    cand = (d1, d2, d1', d2') where d2 and d2' are the fast partners.  The
    mean terms are the expected pipeline boundary cost of the device before
    the swap; the partner terms are the boundary cost afterwards, when the
    fast link spans the two groups.
    """
    d1, d2, d1p, d2p = cand
    if j == j2:
        raise ScheduleError("candidate groups must differ")
    gj, gj2 = p.groups[j], p.groups[j2]
    if d1 == d2 or d1 not in gj or d2 not in gj:
        raise ScheduleError(f"d1={d1}, d2={d2} must be distinct members of group {j}")
    if d1p == d2p or d1p not in gj2 or d2p not in gj2:
        raise ScheduleError(f"d1'={d1p}, d2'={d2p} must be distinct members of group {j2}")
    return _gain_ours(sw.w, gj, gj2, d1, d2, d1p, d2p)


def _gain_ours(w: np.ndarray, gj, gj2, d1: int, d2: int, d1p: int, d2p: int) -> float:
    t1 = float(w[d1, list(gj2)].sum()) / len(gj2) - float(w[d1, d2])
    t2 = float(w[d1p, list(gj)].sum()) / len(gj) - float(w[d1p, d2p])
    return t1 + t2


def gain_kl(sw: SurrogateWeights, p: Partition, d: int, d2: int) -> float:
    """Classical cut-weight gain of swapping d and d2 across their groups."""
    jd = jd2 = -1
    for gi, grp in enumerate(p.groups):
        if d in grp:
            jd = gi
        if d2 in grp:
            jd2 = gi
    if jd < 0 or jd2 < 0:
        raise ScheduleError(f"devices {d}, {d2} must belong to the partition")
    if jd == jd2:
        raise ScheduleError(f"devices {d} and {d2} are both in group {jd}")
    w = sw.w
    gj, gj2 = p.groups[jd], p.groups[jd2]
    t1 = float(w[d, list(gj2)].sum())
    t2 = float(w[d, [x for x in gj if x != d]].sum())
    t3 = float(w[d2, list(gj)].sum())
    t4 = float(w[d2, [x for x in gj2 if x != d2]].sum())
    return t1 - t2 + t3 - t4 - 2.0 * float(w[d, d2])


# ---------------------------------------------------------------------------
# local search


def _fast_edge(w: np.ndarray, grp: list[int]) -> tuple[int, int]:
    # Minimum-weight intra-group edge; members ascend, so ties resolve to
    # the lexicographically smallest pair.
    best_v = np.inf
    best = (grp[0], grp[1])
    for i in range(len(grp)):
        wi = w[grp[i]]
        for l in range(i + 1, len(grp)):
            v = wi[grp[l]]
            if v < best_v:
                best_v = v
                best = (grp[i], grp[l])
    return best


def _swap(groups: list[list[int]], j: int, j2: int, a: int, b: int) -> None:
    # a leaves group j for j2; b leaves j2 for j; members stay sorted.
    groups[j].remove(a)
    groups[j2].remove(b)
    insort(groups[j2], a)
    insort(groups[j], b)


def _best_candidate(w: np.ndarray, groups: list[list[int]], j: int, j2: int) -> tuple[float, int, int]:
    # Four candidates built from the two fastest intra edges; first best on ties.
    d1, d2 = _fast_edge(w, groups[j])
    d1p, d2p = _fast_edge(w, groups[j2])
    best_gain = -np.inf
    best_ab = (d1, d1p)
    for a, pa, b, pb in (
        (d1, d2, d1p, d2p),
        (d1, d2, d2p, d1p),
        (d2, d1, d1p, d2p),
        (d2, d1, d2p, d1p),
    ):
        gn = _gain_ours(w, groups[j], groups[j2], a, pa, b, pb)
        if gn > best_gain:
            best_gain = gn
            best_ab = (a, b)
    return best_gain, best_ab[0], best_ab[1]


def _group_means(w: np.ndarray, groups: list[list[int]]) -> np.ndarray:
    # mean[u, i] = average weight from device u to the members of group i.
    mean = np.empty((w.shape[0], len(groups)))
    for i, grp in enumerate(groups):
        mean[:, i] = w[:, grp].mean(axis=1)
    return mean


def _home_costs(w: np.ndarray, grp: list[int]) -> np.ndarray:
    # Per member, weight of its cheapest intra-group link.
    sub = w[np.ix_(grp, grp)].copy()
    np.fill_diagonal(sub, np.inf)
    return sub.min(axis=1)


def _move(groups: list[list[int]], v: int, src: int, dst: int) -> None:
    groups[src].remove(v)
    insort(groups[dst], v)


def _chain_round(
    w: np.ndarray,
    groups: list[list[int]],
    locked: set[int],
) -> bool:
    """One chain of tentative single-device relocations with prefix rollback.

    Starting from the group whose fastest-linked free device promises the
    largest relocation gain, the chain repeatedly takes the current
    group's fastest-linked free device and tentatively moves it to the
    group it is most expensive against, locking the device.  Balance is
    restored by closing the cycle back into the start group at the
    revertible position with the largest cumulative gain; the whole
    chain is rolled back when no closure is profitable.  Devices touched
    by the chain stay locked either way.
    """
    k = len(groups)
    mean = _group_means(w, groups)

    def fastest_free(i: int) -> tuple[int, float] | None:
        grp = groups[i]
        if len(grp) < 2:
            return None
        free = [u for u in grp if u not in locked]
        if not free:
            return None
        home_all = _home_costs(w, grp)
        by_dev = dict(zip(grp, home_all))
        v = min(free, key=lambda d: (by_dev[d], d))
        return v, float(by_dev[v])

    best_start = -np.inf
    start = -1
    for i in range(k):
        pick = fastest_free(i)
        if pick is None:
            continue
        v, home = pick
        others = [j for j in range(k) if j != i]
        gain = float(mean[v, others].max()) - home
        if gain > best_start:
            best_start = gain
            start = i
    if start < 0:
        return False
    moves: list[tuple[int, int, int]] = []  # (device, src, dst)
    steps: list[float] = []  # predicted gain of each applied move
    closers: list[float] = []  # gain of closing into start instead, per position
    cur = start
    natural = False
    for _ in range(k):
        pick = fastest_free(cur)
        if pick is None:
            break
        v, home = pick
        targets = [j for j in range(k) if j != cur]
        scores = mean[v, targets]
        dst = targets[int(np.argmax(scores))]
        closers.append(float(mean[v, start]) - home if cur != start else -np.inf)
        steps.append(float(scores.max()) - home)
        _move(groups, v, cur, dst)
        locked.add(v)
        moves.append((v, cur, dst))
        for col in (cur, dst):
            mean[:, col] = w[:, groups[col]].mean(axis=1)
        cur = dst
        if cur == start:
            natural = True
            break
    if not moves:
        return False
    # Score every closure position: keep moves[0..l-1], then send position
    # l's device into the start group; a chain that walked back into the
    # start group on its own may also be kept whole.
    prefix = np.concatenate(([0.0], np.cumsum(steps)))
    best_v, best_l = -np.inf, -1
    full = len(moves)
    for l in range(full):
        value = prefix[l] + closers[l]
        if value > best_v:
            best_v, best_l = value, l
    if natural and prefix[full] > best_v:
        best_v, best_l = float(prefix[full]), full
    if best_v <= 0.0:
        for v, src, dst in reversed(moves):
            _move(groups, v, dst, src)
        return False
    for v, src, dst in reversed(moves[best_l:]):
        _move(groups, v, dst, src)
    if best_l < full:
        v, src, _ = moves[best_l]
        _move(groups, v, src, start)
    return True


def _pass_ours(w: np.ndarray, groups: list[list[int]], rng: np.random.Generator, phase: int = 0) -> bool:
    """One refinement pass; even phases sweep pairs, odd phases run chains.

    The pairwise sweep applies best strictly-positive four-candidate
    swaps until each group pair settles (bounded per pair by the group
    size).  The circular extension runs relocation chains until every
    device has been locked by some chain.  The two phases alternate
    across passes so the true-cost guard in between can keep whichever
    intermediate layout scores best.
    """
    k = len(groups)
    d_dp = len(groups[0])
    changed = False
    if d_dp < 2:
        return False
    if phase % 2 == 0:
        pairs = [(j, j2) for j in range(k) for j2 in range(j + 1, k)]
        for i in rng.permutation(len(pairs)):
            j, j2 = pairs[i]
            for _ in range(d_dp):
                gain, a, b = _best_candidate(w, groups, j, j2)
                if gain <= 0.0:
                    break
                _swap(groups, j, j2, a, b)
                changed = True
        return changed
    locked: set[int] = set()
    n = sum(len(grp) for grp in groups)
    while len(locked) < n:
        before = len(locked)
        if _chain_round(w, groups, locked):
            changed = True
        if len(locked) == before:
            break
    return changed


def _pass_kl(w: np.ndarray, groups: list[list[int]]) -> bool:
    k = len(groups)
    changed = False
    for j in range(k):
        for j2 in range(j + 1, k):
            a1 = np.asarray(groups[j])
            a2 = np.asarray(groups[j2])
            s11 = w[np.ix_(a1, a1)].sum(axis=1)
            s12 = w[np.ix_(a1, a2)].sum(axis=1)
            s22 = w[np.ix_(a2, a2)].sum(axis=1)
            s21 = w[np.ix_(a2, a1)].sum(axis=1)
            cross = w[np.ix_(a1, a2)]
            gains = (s12 - s11)[:, None] + (s21 - s22)[None, :] - 2.0 * cross
            flat = int(np.argmax(gains))
            i, l = divmod(flat, len(a2))
            if gains[i, l] > 0.0:
                _swap(groups, j, j2, groups[j][i], groups[j2][l])
                changed = True
    return changed


CostFn = Callable[[CommGraph, Partition, WorkloadSpec], CostBreakdown]


def _refine(
    g: CommGraph,
    wspec: WorkloadSpec,
    p: Partition,
    kind: str,
    rng: np.random.Generator,
    max_passes: int,
    cost_fn: CostFn,
) -> tuple[Partition, CostBreakdown]:
    sw = SurrogateWeights.from_instance(g, wspec).w
    best_p = p
    best_cb = cost_fn(g, p, wspec)
    groups = [list(grp) for grp in p.groups]
    # "ours" alternates two pass flavors, so it only settles after a
    # full cycle without change; KL settles on any unchanged pass.
    stop_after = 2 if kind == "ours" else 1
    stale = 0
    for t in range(max_passes):
        if kind == "ours":
            changed = _pass_ours(sw, groups, rng, phase=t)
        else:
            changed = _pass_kl(sw, groups)
        if not changed:
            stale += 1
            if stale >= stop_after:
                break
            continue
        stale = 0
        cand = Partition.from_groups(groups)
        cb = cost_fn(g, cand, wspec)
        if cb.total < best_cb.total:
            best_p, best_cb = cand, cb
    return best_p, best_cb


def local_search(
    g: CommGraph,
    w: WorkloadSpec,
    p: Partition,
    kind: str = "ours",
    rng: np.random.Generator | None = None,
    max_passes: int = 8,
) -> Partition:
    """Refine one partition; returns the best true-cost configuration seen.

    Never returns anything costlier than the input, because the input is
    the first configuration priced.
    """
    kind = str(kind).lower()
    if kind not in ("ours", "kl"):
        raise ScheduleError(f"kind must be 'ours' or 'kl', got {kind!r}")
    if max_passes < 1:
        raise ScheduleError(f"max_passes must be >= 1, got {max_passes}")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(0))
    validate_workload(w, g.n)
    best_p, _ = _refine(g, w, p, kind, rng, max_passes, comm_cost)
    return best_p


def evolve(
    g: CommGraph,
    w: WorkloadSpec,
    cfg: ScheduleConfig,
    threads: int = 1,
) -> ScheduleResult:
    """Run the genetic algorithm; deterministic for a fixed cfg.seed.

    Per generation: two distinct parents breed one offspring, local search
    refines it, and it replaces the worst member if strictly cheaper.  The
    trace records (generation, best total, population mean total).
    """
    validate_workload(w, g.n)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    evaluations = 0

    def cost_fn(gg: CommGraph, pp: Partition, ww: WorkloadSpec) -> CostBreakdown:
        nonlocal evaluations
        evaluations += 1
        return comm_cost(gg, pp, ww)

    population = init_population(g, w, cfg, rng=rng)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            costs = list(pool.map(lambda pp: comm_cost(g, pp, w), population))
        evaluations += len(population)
    else:
        costs = [cost_fn(g, pp, w) for pp in population]
    best_i = min(range(cfg.pop_size), key=lambda t: (costs[t].total, t))
    best_p, best_cb = population[best_i], costs[best_i]

    trace: list[tuple[int, float, float]] = []
    since_improve = 0
    for gen in range(cfg.generations):
        i = int(rng.integers(cfg.pop_size))
        i2 = int(rng.integers(cfg.pop_size - 1))
        if i2 >= i:
            i2 += 1
        offspring = crossover(population[i], population[i2], rng)
        if cfg.local_search == "none":
            refined, cb = offspring, cost_fn(g, offspring, w)
        else:
            refined, cb = _refine(g, w, offspring, cfg.local_search, rng, cfg.max_passes, cost_fn)
        worst = max(range(cfg.pop_size), key=lambda t: costs[t].total)
        if cb.total < costs[worst].total:
            population[worst] = refined
            costs[worst] = cb
        if cb.total < best_cb.total:
            best_p, best_cb = refined, cb
            since_improve = 0
        else:
            since_improve += 1
        trace.append((gen, best_cb.total, float(np.mean([c.total for c in costs]))))
        if cfg.patience is not None and since_improve >= cfg.patience:
            break
    # Canonical group order for the result; the cost is order-invariant but
    # the breakdown's per-group fields should line up with what is returned.
    canonical = best_p.canonical()
    final_cb = cost_fn(g, canonical, w)
    return ScheduleResult(canonical, final_cb, tuple(trace), evaluations, cfg.seed)

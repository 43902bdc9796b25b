"""Headline guarantees, one test per criterion with a PASS/FAIL line.

Run `pytest tests/test_acceptance.py -v -s` to see the per-criterion lines
as they complete.  Budgets are wall-clock seconds, single core.  The two
pinned regression constants (criterion 6) were recorded from the first
passing run and double as cross-platform determinism checks.
"""

from __future__ import annotations

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from hetsched import (
    CommGraph,
    Partition,
    ScheduleConfig,
    SurrogateWeights,
    WorkloadSpec,
    bottleneck_perfect_matching,
    brute_force_best,
    brute_force_bottleneck_matching,
    brute_force_open_loop_tsp,
    comm_cost,
    evaluate_assignment,
    evolve,
    gain_kl,
    generate_scenario,
    materialize,
    open_loop_tsp,
    random_assignment,
    scenario_case,
    symmetrize,
)
from hetsched.scheduler import random_partition

from .conftest import make_g4, make_random_graph, make_w4
from .test_cli import G4_SCENARIO, G4_WORKLOAD, strip_durations

PINNED_WORKLOAD = WorkloadSpec(d_pp=8, d_dp=8, c_pp=1_073_741_824, c_dp=301_989_888)

# Recorded from the first passing run of criterion 6; a later run drifting
# from this value means the search or the cost model changed behavior.
PINNED_CASE5_RATIO = 0.22732911104944017


def _report(label: str, ok: bool, detail: str = "") -> None:
    line = f"[{label}] {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  {detail}"
    print(line, flush=True)


# ---------------------------------------------------------------------------
# criterion 1: matching solver vs brute force


def test_criterion_1_matching_oracle():
    t0 = time.perf_counter()
    mismatches = 0
    for k in range(2, 8):
        for trial in range(100):
            rng = np.random.Generator(np.random.PCG64(k * 1000 + trial))
            w = rng.uniform(0.0, 10.0, size=(k, k))
            fast = bottleneck_perfect_matching(w)
            slow = brute_force_bottleneck_matching(w)
            if fast.bottleneck != slow.bottleneck or fast.pairs != slow.pairs:
                mismatches += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 10.0
    _report("criterion 1: matching equals brute force, k=2..7 x100", ok,
            f"mismatches={mismatches} time={dt:.1f}s")
    assert mismatches == 0
    assert dt < 10.0


# ---------------------------------------------------------------------------
# criterion 2: path solver vs brute force


def test_criterion_2_tsp_oracle():
    t0 = time.perf_counter()
    mismatches = 0
    for k in range(2, 9):
        for trial in range(100):
            rng = np.random.Generator(np.random.PCG64(k * 2000 + trial))
            w = rng.uniform(0.0, 10.0, size=(k, k))
            w = (w + w.T) / 2.0
            np.fill_diagonal(w, 0.0)
            fast = open_loop_tsp(w)
            slow = brute_force_open_loop_tsp(w)
            if fast.total != slow.total:
                mismatches += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 30.0
    _report("criterion 2: path solver equals brute force, k=2..8 x100", ok,
            f"mismatches={mismatches} time={dt:.1f}s")
    assert mismatches == 0
    assert dt < 30.0


# ---------------------------------------------------------------------------
# criterion 3: the reference 4-device instance, exactly


def test_criterion_3_reference_instance():
    g, w = make_g4(), make_w4()
    good = Partition(((0, 1), (2, 3)))
    totals = {
        p: comm_cost(g, Partition(p), w).total
        for p in (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))
    }
    best_p, best_cb = brute_force_best(g, w)
    checks = [
        abs(totals[((0, 1), (2, 3))] - 2.502) <= 1e-9 * 2.502,
        abs(totals[((0, 2), (1, 3))] - 4.302) <= 1e-9 * 4.302,
        abs(totals[((0, 3), (1, 2))] - 4.302) <= 1e-9 * 4.302,
        best_p == good,
        best_cb.total == totals[((0, 1), (2, 3))],
    ]
    ok = all(checks)
    _report("criterion 3: 4-device totals 2.502 / 4.302 and exhaustive best", ok,
            f"totals={sorted(set(round(t, 6) for t in totals.values()))}")
    assert all(checks)


# ---------------------------------------------------------------------------
# criterion 4: the search finds tiny optima


def _tiny_hits(n: int, d_pp: int, d_dp: int, trials: int) -> int:
    w = WorkloadSpec(d_pp=d_pp, d_dp=d_dp, c_pp=125_000_000, c_dp=500_000_000)
    cfg = ScheduleConfig(pop_size=8, generations=50, local_search="ours", seed=0)
    hits = 0
    for i in range(trials):
        g = make_random_graph(np.random.default_rng(1000 + i), n)
        _, best = brute_force_best(g, w)
        res = evolve(g, w, cfg)
        if res.best_cost.total <= best.total * (1.0 + 1e-12):
            hits += 1
    return hits


def test_criterion_4_tiny_instance_optimality():
    t0 = time.perf_counter()
    hits4 = _tiny_hits(4, 2, 2, 20)
    hits6 = _tiny_hits(6, 3, 2, 20)
    dt = time.perf_counter() - t0
    ok = hits4 >= 18 and hits6 >= 16 and dt < 60.0
    _report("criterion 4: evolve recovers exhaustive optimum on tiny instances", ok,
            f"n4={hits4}/20 (need 18) n6={hits6}/20 (need 16) time={dt:.1f}s")
    assert hits4 >= 18
    assert hits6 >= 16
    assert dt < 60.0


# ---------------------------------------------------------------------------
# criterion 5: the two costing paths agree bit for bit


def test_criterion_5_costing_paths_identical():
    failures = 0
    checked = 0
    for case in (1, 2, 3, 4, 5):
        g = symmetrize(generate_scenario(scenario_case(case, seed=0)))
        rng = np.random.default_rng(case)
        for _ in range(40):
            p = random_partition(rng, 64, d_pp=8, d_dp=8)
            direct = comm_cost(g, p, PINNED_WORKLOAD)
            via = evaluate_assignment(g, materialize(g, p, PINNED_WORKLOAD), PINNED_WORKLOAD)
            checked += 1
            if via.total != direct.total:
                failures += 1
    ok = failures == 0 and checked == 200
    _report("criterion 5: evaluate(materialize(p)) == comm_cost(p) on 200 layouts", ok,
            f"failures={failures}/{checked}")
    assert failures == 0


# ---------------------------------------------------------------------------
# criterion 6: scheduled vs random layouts on the hardest scenario


def test_criterion_6_world_scale_speedup():
    t0 = time.perf_counter()
    g = symmetrize(generate_scenario(scenario_case(5, seed=0)))
    cfg = ScheduleConfig(pop_size=64, generations=1000, local_search="ours", seed=0)
    res = evolve(g, PINNED_WORKLOAD, cfg)
    totals = []
    for child in np.random.SeedSequence(0).spawn(100):
        a = random_assignment(np.random.default_rng(child), 64, d_pp=8, d_dp=8)
        totals.append(evaluate_assignment(g, a, PINNED_WORKLOAD).total)
    ratio = res.best_cost.total / float(np.mean(totals))
    dt = time.perf_counter() - t0
    ok = ratio <= 0.7 and dt < 300.0
    if PINNED_CASE5_RATIO is not None:
        ok = ok and abs(ratio - PINNED_CASE5_RATIO) <= 1e-9 * PINNED_CASE5_RATIO
    _report("criterion 6: scheduled <= 0.7x mean random on world scenario", ok,
            f"ratio={ratio!r} scheduled={res.best_cost.total:.3f} "
            f"random_mean={np.mean(totals):.3f} time={dt:.0f}s")
    assert ratio <= 0.7
    assert dt < 300.0
    if PINNED_CASE5_RATIO is not None:
        assert ratio == pytest.approx(PINNED_CASE5_RATIO, rel=1e-9)


# ---------------------------------------------------------------------------
# criterion 7: four-candidate search vs the classical baseline


def test_criterion_7_beats_kl_baseline(tmp_path):
    t0 = time.perf_counter()
    finals = {}
    for case in (3, 4, 5):
        g = symmetrize(generate_scenario(scenario_case(case, seed=0)))
        for kind in ("ours", "kl"):
            cfg = ScheduleConfig(pop_size=32, generations=150, local_search=kind, seed=0)
            res = evolve(g, PINNED_WORKLOAD, cfg)
            finals[(case, kind)] = res.best_cost.total
            trace_file = tmp_path / f"case{case}_{kind}.csv"
            trace_file.write_text(res.trace_csv())
            assert len(trace_file.read_text().strip().split("\n")) == 151
    wins = sum(finals[(c, "ours")] <= finals[(c, "kl")] for c in (3, 4, 5))
    dt = time.perf_counter() - t0
    ok = wins >= 2
    detail = " ".join(
        f"case{c}:{finals[(c, 'ours')]:.4f}{'<=' if finals[(c, 'ours')] <= finals[(c, 'kl')] else '>'}{finals[(c, 'kl')]:.4f}"
        for c in (3, 4, 5)
    )
    _report("criterion 7: final cost <= classical baseline on 2 of 3 scenarios", ok,
            f"{detail} time={dt:.0f}s")
    assert wins >= 2


# ---------------------------------------------------------------------------
# criterion 8: property suites


def _check_monotonicity() -> int:
    rng = np.random.default_rng(0)
    g = make_random_graph(rng, 16)
    w = WorkloadSpec(d_pp=4, d_dp=4, c_pp=125_000_000, c_dp=500_000_000)
    p = random_partition(rng, 16, d_pp=4, d_dp=4)
    base = comm_cost(g, p, w).total
    violations = 0
    for t in range(500):
        i, j = rng.integers(0, 16, size=2)
        if i == j:
            continue
        if t % 2 == 0:
            lat = g.lat.copy()
            lat[i, j] = lat[j, i] = lat[i, j] + rng.uniform(0.001, 0.5)
            total = comm_cost(CommGraph(lat=lat, bw=g.bw), p, w).total
        else:
            bw = g.bw.copy()
            bw[i, j] = bw[j, i] = bw[i, j] * rng.uniform(0.05, 0.95)
            total = comm_cost(CommGraph(lat=g.lat, bw=bw), p, w).total
        if total < base:
            violations += 1
    return violations


def _check_joint_scaling() -> float:
    rng = np.random.default_rng(1)
    worst = 0.0
    g = make_random_graph(rng, 8)
    w = WorkloadSpec(d_pp=4, d_dp=2, c_pp=125_000_000, c_dp=500_000_000)
    p = random_partition(rng, 8, d_pp=4, d_dp=2)
    base = comm_cost(g, p, w).total
    for _ in range(20):
        lam = float(rng.uniform(0.1, 10.0))
        g2 = CommGraph(lat=g.lat, bw=g.bw * lam)
        w2 = WorkloadSpec(4, 2, w.c_pp * lam, w.c_dp * lam)
        worst = max(worst, abs(comm_cost(g2, p, w2).total - base) / base)
    return worst


def _check_relabeling() -> int:
    rng = np.random.default_rng(2)
    w = WorkloadSpec(d_pp=4, d_dp=2, c_pp=125_000_000, c_dp=500_000_000)
    bad = 0
    for _ in range(50):
        g = make_random_graph(rng, 8)
        p = random_partition(rng, 8, d_pp=4, d_dp=2)
        q = Partition(tuple(p.groups[i] for i in rng.permutation(4)))
        a, b = comm_cost(g, p, w), comm_cost(g, q, w)
        if (a.total, a.datap, a.pipelinep) != (b.total, b.datap, b.pipelinep):
            bad += 1
    return bad


def _check_gain_kl_exactness() -> int:
    rng = np.random.default_rng(3)
    bad = 0
    for _ in range(200):
        raw = rng.integers(0, 256, size=(12, 12)).astype(float)
        wm = (raw + raw.T) / 16.0
        np.fill_diagonal(wm, 0.0)
        sw = SurrogateWeights(wm)
        p = random_partition(rng, 12, d_pp=3, d_dp=4)
        ja, jb = rng.choice(3, size=2, replace=False)
        d = int(rng.choice(p.groups[ja]))
        d2 = int(rng.choice(p.groups[jb]))
        cut = lambda ga, gb: sum(wm[x, y] for x in ga for y in gb)
        before = cut(p.groups[ja], p.groups[jb])
        after = cut(
            [x for x in p.groups[ja] if x != d] + [d2],
            [x for x in p.groups[jb] if x != d2] + [d],
        )
        if gain_kl(sw, p, d, d2) != before - after:
            bad += 1
    return bad


def _check_trace_monotone() -> bool:
    g, w = make_g4(), make_w4()
    res = evolve(g, w, ScheduleConfig(pop_size=8, generations=200, seed=9))
    best = [b for _, b, _ in res.trace]
    return all(b2 <= b1 for b1, b2 in zip(best, best[1:]))


def _run_cli(*argv: str) -> tuple[int, str]:
    proc = subprocess.run(
        [sys.executable, "-m", "hetsched", *argv], capture_output=True, text=True
    )
    return proc.returncode, proc.stdout


def _check_cli_determinism(tmp_path) -> bool:
    scenario = tmp_path / "g4.json"
    workload = tmp_path / "w4.json"
    assignment = tmp_path / "a4.json"
    scenario.write_text(json.dumps(G4_SCENARIO))
    workload.write_text(json.dumps(G4_WORKLOAD))
    assignment.write_text(json.dumps({"grid": [[0, 2], [1, 3]]}))

    def canon(path, stdout):
        data = strip_durations(json.loads(path.read_text()))
        if "manifest" in data:
            data["manifest"]["command"] = []
        return data, stdout

    runs = []
    for tag in ("x", "y"):
        sfile = tmp_path / f"s{tag}.json"
        code, out = _run_cli("scenario", "gen", "--case", "5", "--seed", "0",
                             "--out", str(sfile))
        assert code == 0
        rfile = tmp_path / f"r{tag}.json"
        tfile = tmp_path / f"t{tag}.csv"
        code2, out2 = _run_cli(
            "schedule", "--scenario", str(scenario), "--workload", str(workload),
            "--seed", "0", "--pop", "8", "--gens", "20",
            "--out", str(rfile), "--trace", str(tfile),
        )
        assert code2 == 0
        code3, out3 = _run_cli(
            "eval", "--scenario", str(scenario), "--workload", str(workload),
            "--assignment", str(assignment),
        )
        assert code3 == 0
        cfile = tmp_path / f"c{tag}.json"
        code4, out4 = _run_cli(
            "compare", "--scenario", str(scenario), "--workload", str(workload),
            "--seed", "0", "--pop", "8", "--gens", "10", "--random-trials", "5",
            "--out", str(cfile),
        )
        assert code4 == 0
        runs.append((
            canon(sfile, out),
            canon(rfile, out2),
            tfile.read_bytes(),
            strip_durations(json.loads(out3)),
            canon(cfile, out4),
        ))
    return runs[0] == runs[1]


def test_criterion_8_property_suites(tmp_path):
    mono = _check_monotonicity()
    scaling = _check_joint_scaling()
    relabel = _check_relabeling()
    kl_exact = _check_gain_kl_exactness()
    trace_ok = _check_trace_monotone()
    cli_ok = _check_cli_determinism(tmp_path)
    checks = {
        "monotonicity(500)": mono == 0,
        "joint-scaling<=1e-9": scaling <= 1e-9,
        "relabeling": relabel == 0,
        "gain-cut-exact(200)": kl_exact == 0,
        "trace-monotone": trace_ok,
        "cli-determinism": cli_ok,
    }
    ok = all(checks.values())
    detail = " ".join(f"{name}:{'ok' if good else 'FAIL'}" for name, good in checks.items())
    _report("criterion 8: invariant suites", ok, detail)
    assert mono == 0
    assert scaling <= 1e-9
    assert relabel == 0
    assert kl_exact == 0
    assert trace_ok
    assert cli_ok

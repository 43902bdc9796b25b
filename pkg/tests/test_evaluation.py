"""Assignment materialization, fixed-layout evaluation, baselines."""

from __future__ import annotations

import json

import numpy as np
import pytest

from hetsched import (
    Assignment,
    Partition,
    ScheduleConfig,
    WorkloadSpec,
    comm_cost,
    compare_baselines,
    evaluate_assignment,
    materialize,
    random_assignment,
    validate_assignment,
)
from hetsched.evaluation import AssignmentError, assignment_from_dict, load_assignment
from hetsched.scheduler import random_partition

from .conftest import make_g4, make_homogeneous, make_random_graph, make_w4

GOOD = Partition(((0, 1), (2, 3)))
BAD = Partition(((0, 2), (1, 3)))


# ---------------------------------------------------------------------------
# validation


def test_validate_accepts_bijection():
    a = Assignment(grid=((0, 2), (1, 3)), order=(0, 1), matchings=(((0, 2), (1, 3)),))
    validate_assignment(a, 4)


def test_validate_rejects_duplicate():
    a = Assignment(grid=((0, 0), (1, 3)), order=(0, 1), matchings=(((0, 0), (1, 3)),))
    with pytest.raises(AssignmentError, match="duplicate device 0"):
        validate_assignment(a, 4)


def test_validate_rejects_missing():
    a = Assignment(grid=((0, 2), (1, 3)), order=(0, 1), matchings=(((0, 2), (1, 3)),))
    with pytest.raises(AssignmentError, match="missing device 4"):
        validate_assignment(a, 5)


def test_ragged_grid_rejected_at_construction():
    with pytest.raises(AssignmentError, match="same length"):
        Assignment(grid=((0, 2), (1,)), order=(0, 1), matchings=())


# ---------------------------------------------------------------------------
# materialize


def test_materialize_g4_optimal(g4, w4):
    a = materialize(g4, GOOD, w4)
    assert a.grid == ((0, 2), (1, 3))
    assert a.order == (0, 1)
    validate_assignment(a, 4)


def test_materialize_single_stage(g4, w4):
    w1 = WorkloadSpec(d_pp=1, d_dp=4, c_pp=w4.c_pp, c_dp=w4.c_dp)
    a = materialize(g4, Partition(((0, 1, 2, 3),)), w1)
    assert a.grid == ((0,), (1,), (2,), (3,))
    assert a.matchings == ()


def test_materialize_always_valid(w4):
    rng = np.random.default_rng(9)
    w = WorkloadSpec(d_pp=3, d_dp=2, c_pp=w4.c_pp, c_dp=w4.c_dp)
    for _ in range(20):
        g = make_random_graph(rng, 6)
        p = random_partition(rng, 6, d_pp=3, d_dp=2)
        a = materialize(g, p, w)
        validate_assignment(a, 6)
        # each column's device set must be one of the partition's groups
        cols = [tuple(sorted(row[j] for row in a.grid)) for j in range(3)]
        assert sorted(cols) == sorted(p.groups)


def test_materialize_rows_follow_matchings(w4):
    rng = np.random.default_rng(10)
    w = WorkloadSpec(d_pp=3, d_dp=2, c_pp=w4.c_pp, c_dp=w4.c_dp)
    g = make_random_graph(rng, 6)
    p = random_partition(rng, 6, d_pp=3, d_dp=2)
    a = materialize(g, p, w)
    for j, pairs in enumerate(a.matchings):
        stage_pairs = sorted((row[j], row[j + 1]) for row in a.grid)
        assert stage_pairs == sorted(pairs)


# ---------------------------------------------------------------------------
# evaluate_assignment


def test_evaluate_good_grid(g4, w4):
    a = Assignment(grid=((0, 2), (1, 3)), order=(0, 1), matchings=(((0, 2), (1, 3)),))
    bd = evaluate_assignment(g4, a, w4)
    assert bd.datap == 0.402
    assert bd.pipelinep == 2.1
    assert bd.total == pytest.approx(2.502, rel=1e-9)


def test_evaluate_fast_rows_grid(g4, w4):
    a = Assignment(grid=((0, 1), (2, 3)), order=(0, 1), matchings=(((0, 1), (2, 3)),))
    bd = evaluate_assignment(g4, a, w4)
    assert bd.datap == 4.1
    assert bd.pipelinep == 0.202
    assert bd.total == pytest.approx(4.302, rel=1e-9)


def test_evaluate_single_stage_has_no_pipeline_cost(g4, w4):
    w1 = WorkloadSpec(d_pp=1, d_dp=4, c_pp=w4.c_pp, c_dp=w4.c_dp)
    a = Assignment(grid=((0,), (1,), (2,), (3,)), order=(0,), matchings=())
    bd = evaluate_assignment(g4, a, w1)
    assert bd.pipelinep == 0.0
    assert bd.total == bd.datap


def test_evaluate_rejects_wrong_shape(g4, w4):
    a = Assignment(grid=((0,), (1,), (2,), (3,)), order=(0,), matchings=())
    with pytest.raises(AssignmentError):
        evaluate_assignment(g4, a, w4)


def test_evaluate_rejects_invalid_assignment(g4, w4):
    a = Assignment(grid=((0, 0), (1, 3)), order=(0, 1), matchings=(((0, 0), (1, 3)),))
    with pytest.raises(AssignmentError, match="duplicate"):
        evaluate_assignment(g4, a, w4)


def test_materialized_assignment_scores_like_the_partition(w4):
    # end-to-end identity between the two costing paths, bit for bit
    rng = np.random.default_rng(11)
    w = WorkloadSpec(d_pp=4, d_dp=2, c_pp=w4.c_pp, c_dp=w4.c_dp)
    for _ in range(25):
        g = make_random_graph(rng, 8)
        p = random_partition(rng, 8, d_pp=4, d_dp=2)
        direct = comm_cost(g, p, w)
        via_assignment = evaluate_assignment(g, materialize(g, p, w), w)
        assert via_assignment.total == direct.total
        assert via_assignment.datap == direct.datap
        assert via_assignment.pipelinep == direct.pipelinep


def test_row_permutation_leaves_costs_unchanged(g4, w4):
    a = materialize(g4, GOOD, w4)
    swapped = Assignment(
        grid=tuple(reversed(a.grid)),
        order=a.order,
        matchings=a.matchings,
    )
    bd = evaluate_assignment(g4, a, w4)
    bd2 = evaluate_assignment(g4, swapped, w4)
    assert bd.total == bd2.total
    assert bd.per_group_datap == bd2.per_group_datap


def test_random_assignment_is_valid_and_seeded():
    a = random_assignment(np.random.default_rng(3), 8, d_pp=4, d_dp=2)
    b = random_assignment(np.random.default_rng(3), 8, d_pp=4, d_dp=2)
    validate_assignment(a, 8)
    assert a == b
    c = random_assignment(np.random.default_rng(4), 8, d_pp=4, d_dp=2)
    assert a != c


# ---------------------------------------------------------------------------
# JSON forms


def test_assignment_from_grid_only():
    a = assignment_from_dict({"grid": [[0, 2], [1, 3]]})
    assert a.order == (0, 1)
    assert a.matchings == (((0, 2), (1, 3)),)


def test_assignment_round_trip(tmp_path):
    a = Assignment(grid=((0, 2), (1, 3)), order=(0, 1), matchings=(((0, 2), (1, 3)),))
    f = tmp_path / "a.json"
    f.write_text(json.dumps(a.to_dict()))
    assert load_assignment(f) == a


def test_assignment_malformed_json(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("[[")
    with pytest.raises(AssignmentError, match="malformed"):
        load_assignment(f)


# ---------------------------------------------------------------------------
# baselines


def test_compare_g4_scheduled_beats_random(g4, w4):
    cfg = ScheduleConfig(pop_size=8, generations=30, seed=0)
    rep = compare_baselines(g4, w4, cfg, random_trials=10)
    assert rep.scheduled.total == pytest.approx(2.502, rel=1e-9)
    assert rep.scheduled.total <= rep.random_min
    assert rep.random_count == 10
    assert rep.speedup_vs_mean_random == rep.random_mean / rep.scheduled.total


def test_compare_homogeneous_speedup_is_one():
    g = make_homogeneous(4)
    w = WorkloadSpec(d_pp=2, d_dp=2, c_pp=0.5, c_dp=0.5)
    cfg = ScheduleConfig(pop_size=4, generations=5, seed=0)
    rep = compare_baselines(g, w, cfg, random_trials=5)
    assert rep.speedup_vs_mean_random == pytest.approx(1.0, abs=1e-9)


def test_compare_reports_kl_and_serializes(g4, w4):
    cfg = ScheduleConfig(pop_size=8, generations=20, seed=0)
    rep = compare_baselines(g4, w4, cfg, random_trials=4)
    d = rep.to_dict()
    assert d["kl_total"] == pytest.approx(2.502, rel=1e-9)
    assert len(d["random"]["totals"]) == 4
    assert d["scheduled_partition"] == [[0, 1], [2, 3]]


def test_compare_rejects_zero_trials(g4, w4):
    cfg = ScheduleConfig(pop_size=4, generations=5, seed=0)
    with pytest.raises(AssignmentError, match="random_trials"):
        compare_baselines(g4, w4, cfg, random_trials=0)

"""Scheduling toolkit for pipeline+data parallel training on heterogeneous networks.

The package estimates the communication cost of laying a grid of training
tasklets (pipeline stages x data parallel replicas) onto devices whose
pairwise latency and bandwidth vary wildly, and searches for a good layout
with a hybrid genetic algorithm.
"""

__version__ = "0.1.0"

from .netmodel import (
    CommGraph,
    NetworkProfile,
    ScenarioSpec,
    edge_cost,
    generate_scenario,
    load_profile,
    save_profile,
    scenario_case,
    symmetrize,
)
from .workload import (
    ModelSpec,
    ParallelSpec,
    WorkloadSpec,
    derive_workload,
    load_workload,
    validate_workload,
)
from .combinatorics import (
    MatchingResult,
    PathResult,
    bottleneck_perfect_matching,
    bottleneck_value,
    brute_force_bottleneck_matching,
    brute_force_open_loop_tsp,
    open_loop_tsp,
    path_cost,
)
from .costmodel import (
    CoarsenedGraph,
    CostBreakdown,
    Partition,
    brute_force_best,
    coarsen,
    comm_cost,
    datap_cost,
    datap_cost_group,
    pipeline_cost,
)
from .scheduler import (
    ScheduleConfig,
    ScheduleResult,
    SurrogateWeights,
    crossover,
    evolve,
    gain_kl,
    gain_ours,
    init_population,
    local_search,
)
from .evaluation import (
    Assignment,
    ComparisonReport,
    compare_baselines,
    evaluate_assignment,
    materialize,
    random_assignment,
    validate_assignment,
)

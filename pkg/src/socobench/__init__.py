"""Smoothed online optimization testbed.

A library and CLI for online decision-making with movement penalties:
per-round rules judged by competitive ratio against an offline oracle, and
expert-aggregation algorithms judged by dynamic regret against comparator
sequences, with closed-form calculators for every guarantee so runs can be
checked against theory at desk scale.
"""

from .competitive import (
    RunTrace,
    competitive_ratio,
    greedy_ratio_bound,
    naive_ratio_bound,
    recommended_gamma,
    run_greedy,
    run_naive,
)
from .costs import (
    HALF_SQUARED_L2,
    L2,
    GeneralQuadraticCost,
    PolyhedralCost,
    QuadraticCost,
    cost_from_json,
    gradient_bound,
    switch_cost,
    verify_class,
)
from .geometry import Ball, Box, domain_from_json
from .harness import (
    ComparatorSpec,
    InstanceSpec,
    fit_scaling,
    generate_comparators,
    generate_instance,
    load_config,
    run_experiment,
)
from .oracle import OracleResult, offline_optimal_convex, offline_optimal_grid_dp
from .regret import (
    FixedPointSettings,
    GradientStream,
    StepGrid,
    build_step_grid,
    dynamic_regret_switching,
    expert_regret_bound_lookahead,
    expert_regret_bound_standard,
    hedge_update,
    initial_weights,
    meta_loss,
    path_length,
    regret_bound_lookahead,
    regret_bound_standard,
    run_hedge_ogd,
    run_hedge_prox,
)
from .solvers import SolverSettings, minimize_cost, projected_subgradient, prox_step

__version__ = "0.1.0"

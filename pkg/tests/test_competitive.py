import math

import numpy as np
import pytest

from socobench.competitive import (
    build_trace,
    competitive_ratio,
    greedy_ratio_bound,
    naive_ratio_bound,
    recommended_gamma,
    run_greedy,
    run_naive,
)
from socobench.costs import HALF_SQUARED_L2, L2, PolyhedralCost, QuadraticCost, switch_cost
from socobench.geometry import Ball, Box


def test_naive_attains_minimizers_when_feasible():
    dom = Box([-1, -1], [1, 1])
    rng = np.random.default_rng(0)
    costs = [QuadraticCost(1.0, rng.uniform(-1, 1, 2), c=float(rng.uniform(0, 1))) for _ in range(20)]
    tr = run_naive(costs, dom, [0.0, 0.0], HALF_SQUARED_L2)
    for t, f in enumerate(costs):
        np.testing.assert_array_equal(tr.decisions[t], f.v)
    assert float(np.sum(tr.hitting)) == pytest.approx(sum(f.c for f in costs), abs=1e-12)


def test_naive_single_round_from_minimizer_has_no_switching():
    dom = Box([-1], [1])
    f = PolyhedralCost(2.0, [0.5], c=0.3)
    tr = run_naive([f], dom, [0.5], L2)
    assert tr.total == pytest.approx(0.3, abs=1e-15)


def test_naive_hand_sum_one_dimensional():
    dom = Box([-1], [1])
    costs = [PolyhedralCost(1.0, [v]) for v in (-1.0, 1.0, -1.0)]
    tr = run_naive(costs, dom, [0.0], L2)
    assert tr.total == pytest.approx(5.0, abs=1e-12)


def test_naive_decisions_match_projection_exactly():
    dom = Ball([0.0, 0.0], 1.0)
    rng = np.random.default_rng(1)
    costs = [PolyhedralCost(1.0, rng.uniform(-0.9, 0.9, 2)) for _ in range(10)]
    tr = run_naive(costs, dom, [0.0, 0.0], L2)
    for t, f in enumerate(costs):
        np.testing.assert_array_equal(tr.decisions[t], dom.project(f.v))


def test_greedy_examples():
    ball = Ball([0.0, 0.0], 1.0)
    start = np.zeros(2)
    costs = [QuadraticCost(1.0, start) for _ in range(5)]
    tr = run_greedy(costs, ball, start, 1.0)
    assert tr.total == 0.0
    np.testing.assert_array_equal(tr.decisions, np.zeros((5, 2)))

    tr = run_greedy([QuadraticCost(1.0, [1.0, 0.0])], ball, start, 1.0)
    np.testing.assert_allclose(tr.decisions[0], [0.5, 0.0], atol=1e-12)
    assert tr.total == pytest.approx(0.25, abs=1e-12)

    rng = np.random.default_rng(2)
    costs = [QuadraticCost(1.0, rng.uniform(-1, 1, 2)) for _ in range(30)]
    tr = run_greedy(costs, ball, start, 1e6)
    assert np.max(np.linalg.norm(tr.decisions - start, axis=1)) <= 1e-3


def test_trace_invariants():
    dom = Box([-1, -1], [1, 1])
    rng = np.random.default_rng(3)
    costs = [QuadraticCost(1.0, rng.uniform(-1, 1, 2)) for _ in range(15)]
    tr = run_greedy(costs, dom, [0.0, 0.0], 0.7)
    assert tr.total == float(np.sum(tr.hitting)) + float(np.sum(tr.switching))
    prev = tr.start
    for t in range(tr.horizon):
        assert tr.switching[t] == switch_cost(HALF_SQUARED_L2, tr.decisions[t], prev)
        assert dom.contains(tr.decisions[t], tol=1e-9)
        prev = tr.decisions[t]


def test_run_argument_guards():
    dom = Box([-1], [1])
    with pytest.raises(ValueError):
        run_naive([], dom, [0.0], L2)
    with pytest.raises(ValueError):
        run_naive([PolyhedralCost(1.0, [0.0])], dom, [2.0], L2)
    with pytest.raises(ValueError):
        run_greedy([QuadraticCost(1.0, [0.0])], dom, [0.0], gamma=-1.0)
    with pytest.raises(ValueError):
        build_trace(np.zeros((2, 1)), np.zeros(1), [QuadraticCost(1.0, [0.0])], L2)


def test_recommended_gamma_values_and_monotonicity():
    assert recommended_gamma(1.0) == 0.5
    assert recommended_gamma(4.0) == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert recommended_gamma(100.0) == pytest.approx(100.0 / 110.0, abs=1e-15)
    grid = np.logspace(-3, 3, 200)
    vals = [recommended_gamma(lam) for lam in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(0 < v < 1 for v in vals)
    with pytest.raises(ValueError):
        recommended_gamma(0.0)


def test_competitive_ratio_conventions():
    assert competitive_ratio(10.0, 5.0) == 2.0
    assert competitive_ratio(0.0, 0.0) == 1.0
    assert competitive_ratio(7.0, 0.0) == math.inf
    with pytest.raises(ValueError):
        competitive_ratio(-1.0, 1.0)


def test_ratio_bounds():
    assert naive_ratio_bound("polyhedral-norm", 4.0) == 1.0
    assert naive_ratio_bound("polyhedral-norm", 0.5) == 4.0
    assert naive_ratio_bound("quadratic", 1.0) == 5.0
    assert greedy_ratio_bound(1.0) == 3.0
    assert greedy_ratio_bound(4.0) == 2.0
    with pytest.raises(ValueError):
        naive_ratio_bound("unknown", 1.0)

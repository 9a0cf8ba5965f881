import numpy as np
import pytest

from socobench.costs import HALF_SQUARED_L2, L2, PolyhedralCost, QuadraticCost
from socobench.geometry import Ball, Box
from socobench.oracle import (
    GridTooLargeError,
    _transition_abs_uniform,
    _transition_halfsq_uniform,
    _transition_scan,
    chain_objective,
    offline_optimal_convex,
    offline_optimal_grid_dp,
)


def enumerate_exact(costs, grid, start, m_kind):
    """Exhaustive minimum over all grid sequences.

    Keeps one tensor axis per round and folds each path's cost in the same
    association order as the DP recursion, value_t = f_t + (value + move),
    so totals are comparable bitwise.
    """
    pts = grid
    n = pts.shape[0]
    dist0 = np.linalg.norm(pts - start, axis=1)
    move0 = dist0 if m_kind == L2 else 0.5 * dist0 * dist0
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    move = dist if m_kind == L2 else 0.5 * dist * dist
    acc = costs[0].values(pts) + move0
    for t in range(1, len(costs)):
        f_vals = costs[t].values(pts).reshape((1,) * acc.ndim + (n,))
        move_prev_new = move.T.reshape((1,) * (acc.ndim - 1) + (n, n))
        acc = f_vals + (acc[..., None] + move_prev_new)
    return float(acc.min())


def test_dp_single_round_stays_at_minimizer():
    dom = Box([-1.0], [1.0])
    res = offline_optimal_grid_dp([PolyhedralCost(1.0, [0.0])], dom, [0.0], L2, 11)
    assert res.total == 0.0
    np.testing.assert_array_equal(res.sequence, [[0.0]])


def test_dp_two_rounds_opposing_pulls():
    # staying put ties with drifting to either minimizer; total is 2 either way
    dom = Box([-1.0], [1.0])
    costs = [PolyhedralCost(1.0, [1.0]), PolyhedralCost(1.0, [-1.0])]
    res = offline_optimal_grid_dp(costs, dom, [0.0], L2, 21)
    assert res.total == pytest.approx(2.0, abs=1e-12)
    recomputed = chain_objective(costs, res.sequence, np.zeros(1), L2)
    assert recomputed == pytest.approx(2.0, abs=1e-12)


def test_dp_refinement_never_increases():
    dom = Box([-1.0], [1.0])
    rng = np.random.default_rng(0)
    costs = [QuadraticCost(1.0, rng.uniform(-1, 1, 1)) for _ in range(12)]
    coarse = offline_optimal_grid_dp(costs, dom, [0.0], HALF_SQUARED_L2, 101)
    fine = offline_optimal_grid_dp(costs, dom, [0.0], HALF_SQUARED_L2, 1001)
    assert fine.total <= coarse.total + 1e-9


def test_dp_equals_exhaustive_enumeration_small():
    rng = np.random.default_rng(1)
    dom = Box([-1.0], [1.0])
    grid = np.linspace(-1, 1, 11)[:, None]
    for case in range(50):
        T = int(rng.integers(1, 4))
        m_kind = L2 if case % 2 == 0 else HALF_SQUARED_L2
        costs = []
        for _ in range(T):
            if case % 3 == 0:
                costs.append(PolyhedralCost(float(rng.uniform(0.3, 3)), rng.uniform(-1, 1, 1)))
            else:
                costs.append(QuadraticCost(float(rng.uniform(0.3, 3)), rng.uniform(-1, 1, 1)))
        start = np.array([float(rng.uniform(-1, 1))])
        res = offline_optimal_grid_dp(costs, dom, start, m_kind, 11)
        assert res.total == enumerate_exact(costs, grid, start, m_kind)


def test_dp_sequence_total_consistent():
    dom = Box([-1.0, -1.0], [1.0, 1.0])
    rng = np.random.default_rng(2)
    costs = [QuadraticCost(1.0, rng.uniform(-1, 1, 2)) for _ in range(6)]
    res = offline_optimal_grid_dp(costs, dom, [0.0, 0.0], HALF_SQUARED_L2, 15)
    recomputed = chain_objective(costs, res.sequence, np.zeros(2), HALF_SQUARED_L2)
    assert abs(res.total - recomputed) <= 1e-9


def test_dp_dominates_algorithm_traces():
    from socobench.competitive import run_greedy, run_naive

    dom = Box([-1.0], [1.0])
    rng = np.random.default_rng(3)
    costs = [QuadraticCost(2.0, rng.uniform(-1, 1, 1)) for _ in range(40)]
    res = offline_optimal_grid_dp(costs, dom, [0.0], HALF_SQUARED_L2, 801)
    for trace in (
        run_naive(costs, dom, [0.0], HALF_SQUARED_L2),
        run_greedy(costs, dom, [0.0], 0.5),
    ):
        assert res.total <= trace.total + res.slack


def test_dp_pair_cap():
    dom = Box([-1.0, -1.0], [1.0, 1.0])
    costs = [QuadraticCost(1.0, [0.0, 0.0]) for _ in range(2)]
    with pytest.raises(GridTooLargeError):
        offline_optimal_grid_dp(costs, dom, [0.0, 0.0], L2, 200, max_pairs_per_stage=10_000)


def test_dp_ball_domain_feasible_grid():
    dom = Ball([0.0, 0.0], 1.0)
    costs = [PolyhedralCost(1.0, [0.9, 0.0]), PolyhedralCost(1.0, [-0.9, 0.0])]
    res = offline_optimal_grid_dp(costs, dom, [0.0, 0.0], L2, 21)
    for point in res.sequence:
        assert dom.contains(point, tol=1e-9)


def test_transition_transforms_match_scan():
    rng = np.random.default_rng(4)
    n = 311
    h = 2.0 / (n - 1)
    pts = np.linspace(-1, 1, n)[:, None]
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    for _ in range(5):
        convex_v = np.cumsum(np.sort(rng.normal(size=n)))
        convex_v -= convex_v.min()
        m_abs, _ = _transition_abs_uniform(convex_v, h)
        s_abs, _ = _transition_scan(convex_v, dist)
        np.testing.assert_allclose(m_abs, s_abs, atol=1e-10)
        m_sq, _ = _transition_halfsq_uniform(convex_v, h)
        s_sq, _ = _transition_scan(convex_v, 0.5 * dist * dist)
        np.testing.assert_allclose(m_sq, s_sq, atol=1e-10)
        # the plain-distance transform needs no convexity; spot-check that too
        rough = rng.normal(size=n)
        m_abs, _ = _transition_abs_uniform(rough, h)
        s_abs, _ = _transition_scan(rough, dist)
        np.testing.assert_allclose(m_abs, s_abs, atol=1e-10)


def test_convex_oracle_single_round_prox():
    dom = Ball([0.0, 0.0], 1.0)
    res = offline_optimal_convex([QuadraticCost(1.0, [1.0, 0.0])], dom, [0.0, 0.0], HALF_SQUARED_L2)
    np.testing.assert_allclose(res.sequence[0], [0.5, 0.0], atol=1e-9)
    assert res.total == pytest.approx(0.25, abs=1e-9)
    assert res.converged


def test_convex_oracle_constant_minimizers():
    dom = Box([-1.0, -1.0], [1.0, 1.0])
    start = np.array([0.25, -0.5])
    costs = [QuadraticCost(1.0, start, c=0.125) for _ in range(7)]
    res = offline_optimal_convex(costs, dom, start, HALF_SQUARED_L2)
    np.testing.assert_allclose(res.sequence, np.tile(start, (7, 1)), atol=1e-9)
    assert res.total == pytest.approx(7 * 0.125, abs=1e-9)


def test_convex_oracle_agrees_with_dp():
    dom = Box([-1.0], [1.0])
    rng = np.random.default_rng(5)
    for _ in range(10):
        costs = [QuadraticCost(float(rng.uniform(0.5, 3)), rng.uniform(-1, 1, 1)) for _ in range(10)]
        dp = offline_optimal_grid_dp(costs, dom, [0.0], HALF_SQUARED_L2, 1001)
        cv = offline_optimal_convex(costs, dom, [0.0], HALF_SQUARED_L2)
        assert cv.total <= dp.total + 1e-8
        assert cv.total >= dp.total - dp.slack - 1e-8


def test_convex_oracle_objective_monotone_across_sweeps():
    dom = Box([-1.0, -1.0], [1.0, 1.0])
    rng = np.random.default_rng(6)
    costs = [QuadraticCost(1.0, rng.uniform(-1, 1, 2)) for _ in range(12)]
    seen = []
    u = np.stack([dom.project(f.v) for f in costs])
    start = np.zeros(2)
    seen.append(chain_objective(costs, u, start, HALF_SQUARED_L2))
    from socobench.oracle import _block_solve
    from socobench.solvers import SolverSettings

    for _ in range(6):
        for t in list(range(12)) + list(range(11, -1, -1)):
            prev_pt = start if t == 0 else u[t - 1]
            next_pt = u[t + 1] if t < 11 else None
            u[t] = _block_solve(costs[t], prev_pt, next_pt, u[t], dom, HALF_SQUARED_L2, SolverSettings())
        seen.append(chain_objective(costs, u, start, HALF_SQUARED_L2))
    assert all(b <= a + 1e-12 for a, b in zip(seen, seen[1:]))


def test_convex_oracle_l2_blocks_run():
    dom = Box([-1.0], [1.0])
    rng = np.random.default_rng(7)
    costs = [PolyhedralCost(1.0, rng.uniform(-1, 1, 1)) for _ in range(5)]
    res = offline_optimal_convex(costs, dom, [0.0], L2, max_sweeps=40)
    dp = offline_optimal_grid_dp(costs, dom, [0.0], L2, 2001)
    assert res.total <= chain_objective(costs, np.stack([f.v for f in costs]), np.zeros(1), L2) + 1e-9
    assert res.total >= dp.total - dp.slack - 1e-6

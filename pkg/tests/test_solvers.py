import numpy as np
import pytest

from socobench.costs import GeneralQuadraticCost, PolyhedralCost, QuadraticCost
from socobench.geometry import Ball, Box
from socobench.solvers import (
    SolverSettings,
    minimize_cost,
    projected_subgradient,
    prox_objective,
    prox_step,
)


def test_minimize_cost_examples():
    ball = Ball([0, 0], 1.0)
    np.testing.assert_array_equal(minimize_cost(QuadraticCost(1.0, [0.5, 0.0]), ball), [0.5, 0.0])
    np.testing.assert_allclose(minimize_cost(PolyhedralCost(1.0, [3.0, 4.0]), ball), [0.6, 0.8])
    box = Box([-1, -1], [1, 1])
    np.testing.assert_array_equal(minimize_cost(QuadraticCost(1.0, [2.0, 2.0]), box), [1.0, 1.0])


def test_prox_examples():
    ball = Ball([0, 0], 1.0)
    r = prox_step(QuadraticCost(1.0, [1.0, 0.0]), [0.0, 0.0], 1.0, ball)
    np.testing.assert_allclose(r.x, [0.5, 0.0], atol=1e-12)
    r = prox_step(QuadraticCost(2.0, [3.0, 0.0]), [0.0, 0.0], 1.0, ball)
    np.testing.assert_allclose(r.x, [1.0, 0.0], atol=1e-12)
    for f in (QuadraticCost(0.7, [0.2, 0.2]), PolyhedralCost(1.5, [0.2, 0.2])):
        r = prox_step(f, [0.2, 0.2], 2.0, ball)
        np.testing.assert_allclose(r.x, [0.2, 0.2], atol=1e-12)


def test_prox_argument_guards():
    ball = Ball([0, 0], 1.0)
    f = QuadraticCost(1.0, [0.0, 0.0])
    with pytest.raises(ValueError):
        prox_step(f, [5.0, 0.0], 1.0, ball)  # infeasible anchor
    with pytest.raises(ValueError):
        prox_step(f, [0.0, 0.0], 0.0, ball)
    with pytest.raises(ValueError):
        prox_step(f, [0.0, 0.0], 1.0, ball, m_kind="l2")


def _random_cost(rng, kind):
    v = rng.uniform(-0.9, 0.9, size=2)
    if kind == 0:
        return PolyhedralCost(float(rng.uniform(0.3, 3.0)), v, float(rng.uniform(0, 0.4)))
    if kind == 1:
        return QuadraticCost(float(rng.uniform(0.3, 3.0)), v, float(rng.uniform(0, 0.4)))
    lam = float(rng.uniform(0.3, 2.0))
    eigs = np.array([lam, float(rng.uniform(lam, 5 * lam))])
    q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    return GeneralQuadraticCost((q * eigs) @ q.T, lam, v, float(rng.uniform(0, 0.4)))


def test_prox_strong_convexity_optimality():
    rng = np.random.default_rng(42)
    domains = [Box([-1, -1], [1, 1]), Ball([0.0, 0.0], 1.0)]
    for case in range(120):
        dom = domains[case % 2]
        f = _random_cost(rng, case % 3)
        anchor = dom.sample(rng)
        gamma = float(rng.uniform(0.2, 5.0))
        x = prox_step(f, anchor, gamma, dom).x
        value_fn, _ = prox_objective(f, anchor, gamma)
        base = value_fn(x)
        for _ in range(100):
            u = dom.sample(rng)
            assert base + 0.5 * gamma * np.sum((u - x) ** 2) <= value_fn(u) + 1e-6


def test_prox_first_order_optimality_smooth_families():
    # variational inequality <grad f(x*) + gamma (x* - anchor), y - x*> >= 0
    rng = np.random.default_rng(46)
    domains = [Box([-1, -1], [1, 1]), Ball([0.0, 0.0], 1.0)]
    for case in range(60):
        dom = domains[case % 2]
        f = _random_cost(rng, 1 + case % 2)  # quadratic or general-quadratic
        anchor = dom.sample(rng)
        gamma = float(rng.uniform(0.2, 5.0))
        x = prox_step(f, anchor, gamma, dom).x
        g = f.subgradient(x) + gamma * (x - anchor)
        for _ in range(50):
            y = dom.sample(rng)
            assert g @ (y - x) >= -1e-8


def test_prox_closed_form_vs_iterative_quadratic():
    rng = np.random.default_rng(43)
    dom = Box([-1, -1], [1, 1])
    for _ in range(200):
        f = QuadraticCost(float(rng.uniform(0.3, 3.0)), rng.uniform(-0.9, 0.9, size=2))
        anchor = dom.sample(rng)
        gamma = float(rng.uniform(0.2, 5.0))
        closed = prox_step(f, anchor, gamma, dom).x
        iterative = prox_step(f, anchor, gamma, dom, method="iterative").x
        assert np.linalg.norm(closed - iterative) <= 1e-6


def test_prox_subgradient_engine_agrees_loosely():
    rng = np.random.default_rng(44)
    dom = Box([-1, -1], [1, 1])
    for _ in range(20):
        f = QuadraticCost(float(rng.uniform(0.5, 2.0)), rng.uniform(-0.9, 0.9, size=2))
        anchor = dom.sample(rng)
        gamma = float(rng.uniform(0.5, 2.0))
        closed = prox_step(f, anchor, gamma, dom).x
        sub = prox_step(f, anchor, gamma, dom, method="subgradient").x
        assert np.linalg.norm(closed - sub) <= 1e-4


def test_prox_large_gamma_pins_anchor():
    rng = np.random.default_rng(45)
    dom = Box([-1, -1], [1, 1])
    for kind in range(3):
        f = _random_cost(rng, kind)
        anchor = dom.sample(rng)
        x = prox_step(f, anchor, 1e6, dom).x
        assert np.linalg.norm(x - anchor) <= 1e-3


def test_projected_subgradient_examples():
    box = Box([-1, -1], [1, 1])
    res = projected_subgradient(
        lambda x: float(x @ x),
        lambda x: 2 * x,
        box,
        [1.0, 1.0],
        SolverSettings(max_iterations=5000, tolerance=1e-10),
    )
    assert np.linalg.norm(res.x) <= 1e-6

    ball = Ball([0.0, 0.0], 1.0)
    target = np.array([2.0, 0.0])

    def sub(x):
        d = x - target
        n = np.linalg.norm(d)
        return d / n if n > 0 else np.zeros_like(d)

    res = projected_subgradient(
        lambda x: float(np.linalg.norm(x - target)),
        sub,
        ball,
        [0.0, 1.0],
        SolverSettings(max_iterations=20000, tolerance=1e-12),
    )
    assert np.linalg.norm(res.x - [1.0, 0.0]) <= 1e-4

    # already at the minimum: zero subgradient stops immediately at init
    res = projected_subgradient(
        lambda x: float(x @ x), lambda x: 2 * x, box, [0.0, 0.0], SolverSettings()
    )
    assert res.converged and res.iterations == 1
    np.testing.assert_array_equal(res.x, [0.0, 0.0])


def test_prox_budget_exhaustion_flags_result():
    box = Box([-1, -1], [1, 1])
    f = PolyhedralCost(1.0, [0.5, 0.5])
    res = prox_step(
        f,
        [-0.9, -0.9],
        0.8,
        box,
        settings=SolverSettings(max_iterations=3, tolerance=1e-16),
        method="subgradient",
    )
    assert not res.converged
    assert box.contains(res.x)


def test_budget_exhaustion_flags_not_raises():
    box = Box([-1, -1], [1, 1])
    res = projected_subgradient(
        lambda x: float(np.sum(np.abs(x - 0.5))),
        lambda x: np.sign(x - 0.5),
        box,
        [-1.0, -1.0],
        SolverSettings(max_iterations=5, tolerance=1e-16),
    )
    assert not res.converged
    assert res.iterations == 5
    assert box.contains(res.x)


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(max_iterations=0)
    with pytest.raises(ValueError):
        SolverSettings(tolerance=0.0)
    with pytest.raises(ValueError):
        SolverSettings(base_step=-1.0)
    s = SolverSettings.from_json({"max_iterations": 50, "tolerance": 1e-6, "base_step": 0.5})
    assert s.max_iterations == 50
    with pytest.raises(ValueError, match="unknown solver key"):
        SolverSettings.from_json({"tol": 1.0})

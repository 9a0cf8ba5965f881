"""Invariant audit suites behind the `verify` subcommand.

Each suite re-derives a guarantee that should hold on every run (weight
simplex, Hedge stability, loss range, prox-step optimality, step-grid
coverage, per-expert regret bounds, and the lookahead weight telescoping)
and reports violations with witness values. The suites accept fault
injections (scaling the Hedge rate, loosening the prox solver) so that a
deliberately broken setup demonstrably fails.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .competitive import RunTrace
from .costs import GeneralQuadraticCost, PolyhedralCost, QuadraticCost, gradient_bound
from .geometry import Ball, Box
from .harness import ComparatorSpec, InstanceSpec, generate_comparators, generate_instance
from .regret import (
    StepGrid,
    build_step_grid,
    coverage_index,
    expert_regret_bound_lookahead,
    expert_regret_bound_standard,
    hedge_update,
    initial_weights,
    optimal_eta,
    path_length,
    run_hedge_ogd,
    run_hedge_prox,
)
from .solvers import SolverSettings, prox_objective, prox_step

__all__ = [
    "CheckFailure",
    "VerifySettings",
    "run_verify",
    "expert_measured_standard",
    "expert_measured_lookahead",
    "telescoping_slack",
]


@dataclass
class CheckFailure:
    suite: str
    message: str


@dataclass
class VerifySettings:
    seed: int = 20240801
    standard_rounds: int = 400
    lookahead_rounds: int = 300
    hedge_rounds: int = 2000
    coverage_tuples: int = 2000
    prox_solves: int = 60
    prox_witnesses: int = 100
    beta_scale: float = 1.0
    prox_tolerance: float | None = None

    @staticmethod
    def from_json(doc: dict | None) -> "VerifySettings":
        if doc is None:
            return VerifySettings()
        allowed = {
            "seed",
            "standard_rounds",
            "lookahead_rounds",
            "hedge_rounds",
            "coverage_tuples",
            "prox_solves",
            "prox_witnesses",
            "inject",
        }
        extra = sorted(set(doc) - allowed)
        if extra:
            raise ValueError(f"unknown key {extra[0]!r} in verify config")
        kwargs = {k: int(v) for k, v in doc.items() if k != "inject"}
        inject = doc.get("inject") or {}
        extra = sorted(set(inject) - {"beta_scale", "prox_tolerance"})
        if extra:
            raise ValueError(f"unknown key {extra[0]!r} in verify config inject")
        return VerifySettings(
            **kwargs,
            beta_scale=float(inject.get("beta_scale", 1.0)),
            prox_tolerance=(
                float(inject["prox_tolerance"]) if inject.get("prox_tolerance") is not None else None
            ),
        )


# ---------------------------------------------------------------------------
# measured quantities shared with the test suite
# ---------------------------------------------------------------------------


def expert_measured_standard(trace: RunTrace, comparators: np.ndarray, u0: np.ndarray) -> np.ndarray:
    """Per-expert regret-with-movement under the recorded surrogate losses."""
    ex = trace.extras
    grads = ex["gradients"]
    X = ex["expert_points"]
    start = ex["expert_start"]
    T, n, _ = X.shape
    comparators = np.atleast_2d(comparators)
    linear = np.einsum("td,tnd->tn", grads, X - comparators[:, None, :]).sum(axis=0)
    prev = np.concatenate([start[None, None, :].repeat(n, axis=1), X[:-1]], axis=0)
    movement = np.linalg.norm(X - prev, axis=2).sum(axis=0)
    del u0  # the comparator's own path does not enter the per-expert metric
    return linear + movement


def expert_measured_lookahead(
    trace: RunTrace, comparators: np.ndarray, u0: np.ndarray, costs
) -> np.ndarray:
    """Per-expert regret-with-movement under the true per-round costs."""
    ex = trace.extras
    X = ex["expert_points"]
    start = ex["expert_start"]
    T, n, _ = X.shape
    comparators = np.atleast_2d(comparators)
    hit = np.empty((T, n))
    comp_hit = np.empty(T)
    for t in range(T):
        hit[t] = costs[t].values(X[t])
        comp_hit[t] = costs[t].value(comparators[t])
    prev = np.concatenate([start[None, None, :].repeat(n, axis=1), X[:-1]], axis=0)
    movement = np.linalg.norm(X - prev, axis=2).sum(axis=0)
    del u0
    return hit.sum(axis=0) - comp_hit.sum() + movement


def telescoping_slack(trace: RunTrace) -> np.ndarray:
    """Per-expert slack of the lookahead weight-update telescoping bound.

    Nonnegative entries mean the recorded losses and weights satisfy
    sum_t(<w_t, l_t> - l_t^i) <= ln(1/w_0^i)/beta - sum_t ||w_t - w_{t-1}||_1^2 / (2 beta).
    """
    ex = trace.extras
    W = ex["weights"]
    L = ex["meta_losses"]
    w0 = ex["initial_weights"]
    beta = ex["beta"]
    mixed = np.sum(W * L, axis=1)
    lhs = mixed.sum() - L.sum(axis=0)
    prev = np.vstack([w0, W[:-1]])
    drift = np.sum(np.abs(W - prev), axis=1)
    rhs = np.log(1.0 / w0) / beta - float(np.sum(drift**2)) / (2.0 * beta)
    return rhs - lhs


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def _fixture_standard(settings: VerifySettings):
    domain = Box([-1.0, -1.0], [1.0, 1.0])
    spec = InstanceSpec(
        family="quadratic",
        param=1.0,
        domain=domain,
        T=settings.standard_rounds,
        seed=settings.seed,
    )
    costs = generate_instance(spec)
    G = max(gradient_bound(f, domain) for f in costs)
    grid = build_step_grid(spec.T, domain.diameter(), G, mode="standard")
    if settings.beta_scale != 1.0:
        grid = StepGrid(
            etas=grid.etas,
            beta=grid.beta * settings.beta_scale,
            T=grid.T,
            D=grid.D,
            G=grid.G,
            mode=grid.mode,
        )
    trace = run_hedge_ogd(costs, domain, grid, start=None)
    return costs, domain, grid, trace


def _fixture_lookahead(settings: VerifySettings):
    domain = Box([-1.0, -1.0], [1.0, 1.0])
    spec = InstanceSpec(
        family="quadratic",
        param=9.0,
        domain=domain,
        T=settings.lookahead_rounds,
        seed=settings.seed + 1,
    )
    costs = generate_instance(spec)
    grid = build_step_grid(spec.T, domain.diameter(), mode="lookahead")
    trace = run_hedge_prox(costs, domain, grid, start=None)
    return costs, domain, grid, trace


def _check_weight_simplex(trace: RunTrace, label: str) -> list[CheckFailure]:
    out = []
    W = trace.extras["weights"]
    sums = W.sum(axis=1)
    bad = np.where((np.abs(sums - 1.0) > 1e-9) | (W.min(axis=1) < -1e-15))[0]
    for t in bad[:3]:
        out.append(
            CheckFailure(
                "weight-simplex",
                f"{label} round {t + 1}: sum={sums[t]!r} min={W[t].min()!r}",
            )
        )
    return out


def _check_run_stability(trace: RunTrace, grid: StepGrid) -> list[CheckFailure]:
    W = trace.extras["weights"]
    # the guarantee is pinned to the nominal rate for this horizon, so an
    # inflated configured rate shows up as a violation rather than a looser bound
    nominal = build_step_grid(grid.T, grid.D, grid.G, mode="standard").beta
    bound = nominal * (grid.G + 0.5) * grid.D + 1e-9
    drift = np.sum(np.abs(np.diff(W, axis=0)), axis=1)
    bad = np.where(drift > bound)[0]
    return [
        CheckFailure(
            "hedge-stability",
            f"run round {t + 2}: drift={drift[t]!r} exceeds bound={bound!r}",
        )
        for t in bad[:3]
    ]


def _check_loss_range(trace: RunTrace, grid: StepGrid) -> list[CheckFailure]:
    L = trace.extras["meta_losses"]
    lo, hi = -grid.G * grid.D - 1e-9, (grid.G + 1) * grid.D + 1e-9
    bad = np.where((L < lo) | (L > hi))
    out = []
    for t, i in zip(*bad):
        out.append(
            CheckFailure(
                "loss-range",
                f"round {t + 1} expert {i + 1}: loss={L[t, i]!r} outside [{lo!r}, {hi!r}]",
            )
        )
        if len(out) >= 3:
            break
    return out


def _check_synthetic_stability(settings: VerifySettings) -> list[CheckFailure]:
    G, D = 1.0, 2.0
    rounds = settings.hedge_rounds
    grid = build_step_grid(rounds, D, G, mode="standard")
    beta = grid.beta * settings.beta_scale
    bound = grid.beta * (G + 0.5) * D + 1e-9
    rng = np.random.default_rng(settings.seed + 2)
    n = grid.size
    lo, hi = -G * D, (G + 1) * D
    w = initial_weights(n)
    out = []
    for t in range(1, rounds + 1):
        roll = rng.uniform()
        if roll < 0.25:
            losses = rng.choice([lo, hi], size=n)  # extreme corners
        elif roll < 0.5:
            losses = np.full(n, lo if t % 2 == 0 else hi)  # alternating slabs
        else:
            losses = rng.uniform(lo, hi, size=n)
        w_next = hedge_update(w, losses, beta)
        drift = float(np.sum(np.abs(w_next - w)))
        if drift > bound:
            out.append(
                CheckFailure(
                    "hedge-stability",
                    f"synthetic round {t}: drift={drift!r} exceeds bound={bound!r}",
                )
            )
            if len(out) >= 3:
                break
        w = w_next
    return out


def _check_prox_optimality(settings: VerifySettings) -> list[CheckFailure]:
    rng = np.random.default_rng(settings.seed + 3)
    domains = [Box([-1.0, -1.0], [1.0, 1.0]), Ball([0.0, 0.0], 1.0)]
    out = []
    method = "auto"
    solver = None
    if settings.prox_tolerance is not None:
        method = "subgradient"
        solver = SolverSettings(max_iterations=10000, tolerance=settings.prox_tolerance)
    for case in range(settings.prox_solves):
        domain = domains[case % 2]
        v = domain.sample(rng)
        c = float(rng.uniform(0.0, 0.5))
        kind = case % 3
        if kind == 0:
            f = PolyhedralCost(float(rng.uniform(0.3, 3.0)), v, c)
        elif kind == 1:
            f = QuadraticCost(float(rng.uniform(0.3, 3.0)), v, c)
        else:
            lam = float(rng.uniform(0.3, 2.0))
            eigs = np.array([lam, float(rng.uniform(lam, 4 * lam))])
            q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
            f = GeneralQuadraticCost((q * eigs) @ q.T, lam, v, c)
        anchor = domain.sample(rng)
        gamma = float(rng.uniform(0.2, 5.0))
        x_star = prox_step(f, anchor, gamma, domain, settings=solver, method=method).x
        value_fn, _ = prox_objective(f, anchor, gamma)
        base = value_fn(x_star)
        for _ in range(settings.prox_witnesses):
            u = domain.sample(rng)
            lhs = base + 0.5 * gamma * float(np.sum((u - x_star) ** 2))
            rhs = value_fn(u)
            if lhs > rhs + 1e-6:
                out.append(
                    CheckFailure(
                        "prox-optimality",
                        f"case {case}: violation {lhs - rhs!r} (family={f.family}, gamma={gamma:.3g})",
                    )
                )
                break
        if len(out) >= 3:
            break
    return out


def _check_grid_coverage(settings: VerifySettings) -> list[CheckFailure]:
    rng = np.random.default_rng(settings.seed + 4)
    out = []
    for case in range(settings.coverage_tuples):
        T = int(rng.integers(1, 20000))
        D = float(rng.uniform(0.05, 50.0))
        G = float(rng.uniform(0.05, 50.0))
        p_t = float(rng.uniform(0.0, T * D))
        mode = "standard" if case % 2 == 0 else "lookahead"
        grid = build_step_grid(T, D, G if mode == "standard" else None, mode=mode)
        star = optimal_eta(T, D, p_t, G if mode == "standard" else None, mode=mode)
        k = coverage_index(p_t, D)
        if k > grid.size:
            out.append(CheckFailure("grid-coverage", f"case {case}: index {k} beyond grid size {grid.size}"))
        else:
            eta_k = grid.etas[k - 1]
            if not (eta_k <= star * (1 + 1e-12) and star <= 2 * eta_k * (1 + 1e-12)):
                out.append(
                    CheckFailure(
                        "grid-coverage",
                        f"case {case}: eta_k={eta_k!r} does not bracket eta*={star!r}",
                    )
                )
        if len(out) >= 3:
            break
    return out


def _check_expert_bounds(settings: VerifySettings, std, look) -> list[CheckFailure]:
    out = []
    costs_s, domain_s, grid_s, trace_s = std
    costs_l, domain_l, grid_l, trace_l = look
    comp_specs = [
        ComparatorSpec(kind="fixed-point"),
        ComparatorSpec(kind="lazy-tracking", tau=grid_s.D * sqrt(grid_s.T) / 4.0),
        ComparatorSpec(kind="minimizer-tracking"),
    ]
    for comp in comp_specs:
        u = generate_comparators(comp, costs_s, domain_s, trace_s.start)
        p_t = path_length(u, trace_s.start)
        measured = expert_measured_standard(trace_s, u, trace_s.start)
        bounds = np.array(
            [
                expert_regret_bound_standard(eta, grid_s.T, grid_s.D, grid_s.G, p_t)
                for eta in grid_s.etas
            ]
        )
        bad = np.where(measured > bounds + 1e-9)[0]
        for i in bad[:2]:
            out.append(
                CheckFailure(
                    "expert-bounds",
                    f"gradient-mode expert {i + 1} ({comp.kind}): measured={measured[i]!r} "
                    f"bound={bounds[i]!r}",
                )
            )
        u = generate_comparators(comp, costs_l, domain_l, trace_l.start)
        p_t = path_length(u, trace_l.start)
        measured = expert_measured_lookahead(trace_l, u, trace_l.start, costs_l)
        bounds = np.array(
            [expert_regret_bound_lookahead(eta, grid_l.T, grid_l.D, p_t) for eta in grid_l.etas]
        )
        bad = np.where(measured > bounds + 1e-9)[0]
        for i in bad[:2]:
            out.append(
                CheckFailure(
                    "expert-bounds",
                    f"lookahead expert {i + 1} ({comp.kind}): measured={measured[i]!r} "
                    f"bound={bounds[i]!r}",
                )
            )
    return out


def _check_telescoping(trace: RunTrace) -> list[CheckFailure]:
    slack = telescoping_slack(trace)
    bad = np.where(slack < -1e-9)[0]
    return [
        CheckFailure(
            "lookahead-telescoping",
            f"expert {i + 1}: bound violated by {-slack[i]!r}",
        )
        for i in bad[:3]
    ]


SUITES = (
    "weight-simplex",
    "hedge-stability",
    "loss-range",
    "prox-optimality",
    "grid-coverage",
    "expert-bounds",
    "lookahead-telescoping",
)


def run_verify(settings: VerifySettings | None = None) -> tuple[list[str], list[CheckFailure]]:
    """Run every suite; returns (report lines, failures)."""
    settings = settings or VerifySettings()
    std = _fixture_standard(settings)
    look = _fixture_lookahead(settings)
    failures: list[CheckFailure] = []
    failures += _check_weight_simplex(std[3], "gradient-mode")
    failures += _check_weight_simplex(look[3], "lookahead")
    failures += _check_run_stability(std[3], std[2])
    failures += _check_synthetic_stability(settings)
    failures += _check_loss_range(std[3], std[2])
    failures += _check_prox_optimality(settings)
    failures += _check_grid_coverage(settings)
    failures += _check_expert_bounds(settings, std, look)
    failures += _check_telescoping(look[3])

    lines = []
    failed_suites = {f.suite for f in failures}
    for suite in SUITES:
        if suite in failed_suites:
            for f in failures:
                if f.suite == suite:
                    lines.append(f"FAIL {suite}: {f.message}")
        else:
            lines.append(f"PASS {suite}")
    return lines, failures

"""Inner minimization engines.

Two problems appear everywhere downstream: minimizing one hitting cost over
the feasible set, and the proximal step

    argmin_x  f(x) + (gamma / 2) * ||x - anchor||^2   over the domain.

Both admit closed forms for the built-in families:

* any family: the constrained cost minimizer is project(v), because every
  family is nondecreasing in the distance to its stored minimizer;
* quadratic: the prox objective collapses to a single scaled squared
  distance, so the answer is a projection of a convex combination;
* polyhedral-norm: the unconstrained prox solution lies on the segment
  between the cost minimizer and the anchor (both feasible, set convex),
  so shrinkage along that segment is already the constrained answer;
* general-quadratic: the unconstrained solution is a linear solve; when it
  is infeasible we fall back to projected gradient, which converges
  linearly on this smooth strongly convex objective.

A generic projected-subgradient engine with diminishing steps s/sqrt(k) is
kept for nonsmooth objectives and as an independent cross-check path.
Convergence trouble is reported as a flag on the result, never an
exception, so long sweeps do not abort mid-run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import (
    HALF_SQUARED_L2,
    CostFunction,
    GeneralQuadraticCost,
    PolyhedralCost,
    QuadraticCost,
    gradient_bound,
)
from .geometry import Domain, as_point

__all__ = [
    "SolverSettings",
    "SolveResult",
    "minimize_cost",
    "prox_step",
    "projected_subgradient",
    "prox_objective",
]


@dataclass
class SolverSettings:
    """Iterative-solver knobs: budget, successive-iterate tolerance, base step."""

    max_iterations: int = 10000
    tolerance: float = 1e-8
    base_step: float | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.base_step is not None and self.base_step <= 0:
            raise ValueError("base_step must be > 0")

    @staticmethod
    def from_json(rec: dict) -> "SolverSettings":
        extra = set(rec) - {"max_iterations", "tolerance", "base_step"}
        if extra:
            raise ValueError(f"unknown solver key: {sorted(extra)[0]}")
        return SolverSettings(
            max_iterations=int(rec.get("max_iterations", 10000)),
            tolerance=float(rec.get("tolerance", 1e-8)),
            base_step=rec.get("base_step"),
        )


@dataclass
class SolveResult:
    x: np.ndarray
    converged: bool
    iterations: int
    objective: float


def minimize_cost(f: CostFunction, domain: Domain, settings: SolverSettings | None = None) -> np.ndarray:
    """Constrained minimizer of a hitting cost: exactly project(v)."""
    del settings  # closed form for every built-in family
    return domain.project(f.v)


def prox_objective(f: CostFunction, anchor: np.ndarray, gamma: float):
    """(value, subgradient) oracles for f(x) + (gamma/2)||x - anchor||^2."""

    def value(x):
        delta = x - anchor
        return f.value(x) + 0.5 * gamma * float(delta @ delta)

    def subgrad(x):
        return f.subgradient(x) + gamma * (x - anchor)

    return value, subgrad


def projected_subgradient(
    value_fn,
    subgrad_fn,
    domain: Domain,
    init,
    settings: SolverSettings | None = None,
) -> SolveResult:
    """Projected subgradient descent with diminishing steps s / sqrt(k).

    Tracks the best iterate by objective value and stops once successive
    iterates are within `settings.tolerance` or the budget runs out. The
    default base step is D / max(||g(init)||, 1).
    """
    settings = settings or SolverSettings()
    x = domain.project(as_point(init, dim=domain.dimension, name="init"))
    g = np.asarray(subgrad_fn(x), dtype=float)
    if settings.base_step is not None:
        s = settings.base_step
    else:
        s = domain.diameter() / max(float(np.linalg.norm(g)), 1.0)
        if s == 0.0:
            s = 1.0
    best_x = x
    best_val = float(value_fn(x))
    converged = False
    k = 0
    for k in range(1, settings.max_iterations + 1):
        step = s / np.sqrt(k)
        x_next = domain.project(x - step * g)
        val = float(value_fn(x_next))
        if val < best_val:
            best_val = val
            best_x = x_next
        move = float(np.linalg.norm(x_next - x))
        x = x_next
        if move <= settings.tolerance:
            converged = True
            break
        g = np.asarray(subgrad_fn(x), dtype=float)
    return SolveResult(x=best_x, converged=converged, iterations=k, objective=best_val)


def _projected_gradient(
    value_fn,
    grad_fn,
    lipschitz: float,
    domain: Domain,
    init: np.ndarray,
    settings: SolverSettings,
) -> SolveResult:
    """Constant-step projected gradient for smooth strongly convex objectives."""
    step = 1.0 / max(lipschitz, 1e-300)
    x = domain.project(init)
    converged = False
    k = 0
    for k in range(1, settings.max_iterations + 1):
        x_next = domain.project(x - step * np.asarray(grad_fn(x), dtype=float))
        move = float(np.linalg.norm(x_next - x))
        x = x_next
        if move <= settings.tolerance:
            converged = True
            break
    return SolveResult(x=x, converged=converged, iterations=k, objective=float(value_fn(x)))


def prox_step(
    f: CostFunction,
    anchor,
    gamma: float,
    domain: Domain,
    settings: SolverSettings | None = None,
    m_kind: str = HALF_SQUARED_L2,
    method: str = "auto",
) -> SolveResult:
    """Minimize f(x) + (gamma/2)||x - anchor||^2 over the domain.

    Args:
        f: hitting cost (any built-in family).
        anchor: previous decision; must be feasible.
        gamma: positive movement weight.
        m_kind: only the half-squared penalty is supported.
        method: "auto" prefers closed forms; "iterative" forces the smooth
            projected-gradient / nonsmooth projected-subgradient fallback;
            "subgradient" forces the generic subgradient engine.

    Returns:
        SolveResult; `converged` is False when an iterative fallback ran out
        of budget (best iterate still returned).
    """
    if m_kind != HALF_SQUARED_L2:
        raise ValueError("prox_step supports only the half-squared-l2 penalty")
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    anchor = as_point(anchor, dim=domain.dimension, name="anchor")
    if not domain.contains(anchor, tol=1e-9):
        raise ValueError("anchor must be feasible")
    if method not in ("auto", "iterative", "subgradient"):
        raise ValueError(f"unknown prox method: {method!r}")
    settings = settings or SolverSettings()
    value_fn, subgrad_fn = prox_objective(f, anchor, gamma)

    if method == "subgradient":
        sub_settings = settings
        if settings.base_step is None:
            g_bound = gradient_bound(f, domain) + gamma * domain.diameter()
            sub_settings = SolverSettings(
                max_iterations=settings.max_iterations,
                tolerance=settings.tolerance,
                base_step=domain.diameter() / max(g_bound, 1e-12),
            )
        return projected_subgradient(value_fn, subgrad_fn, domain, anchor, sub_settings)

    if isinstance(f, QuadraticCost):
        if method == "auto":
            target = (f.lam * f.v + gamma * anchor) / (f.lam + gamma)
            x = domain.project(target)
            return SolveResult(x=x, converged=True, iterations=0, objective=float(value_fn(x)))
        return _projected_gradient(value_fn, subgrad_fn, f.lam + gamma, domain, anchor, settings)

    if isinstance(f, GeneralQuadraticCost):
        if method == "auto":
            d = f.dimension
            rhs = f.H @ f.v + gamma * anchor
            target = np.linalg.solve(f.H + gamma * np.eye(d), rhs)
            if domain.contains(target, tol=1e-12):
                return SolveResult(
                    x=target, converged=True, iterations=0, objective=float(value_fn(target))
                )
        return _projected_gradient(value_fn, subgrad_fn, f.max_eig + gamma, domain, anchor, settings)

    if isinstance(f, PolyhedralCost):
        if method == "auto" and domain.contains(f.v, tol=1e-9):
            # Unconstrained shrinkage lands on the segment [v, anchor], which is
            # feasible by convexity, so it is also the constrained answer.
            delta = anchor - f.v
            dist = float(np.linalg.norm(delta))
            shrink = max(0.0, dist - f.alpha / gamma)
            if shrink == 0.0:
                x = f.v.copy()
            else:
                x = f.v + (shrink / dist) * delta
            return SolveResult(x=x, converged=True, iterations=0, objective=float(value_fn(x)))
        sub_settings = settings
        if settings.base_step is None:
            g_bound = f.alpha + gamma * domain.diameter()
            sub_settings = SolverSettings(
                max_iterations=settings.max_iterations,
                tolerance=settings.tolerance,
                base_step=domain.diameter() / max(g_bound, 1e-12),
            )
        return projected_subgradient(value_fn, subgrad_fn, domain, anchor, sub_settings)

    raise TypeError(f"unsupported cost type: {type(f).__name__}")

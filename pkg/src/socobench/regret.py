"""Expert aggregation for dynamic regret with switching cost.

Both algorithms here hedge over a geometric grid of step sizes, one expert
per step size, and fold each expert's own movement into the loss the meta
layer sees:

    loss(expert) = <g_t, x_t^eta - x_t> + ||x_t^eta - x_{t-1}^eta||

* standard mode (`run_hedge_ogd`): the cost is revealed only after the
  round's decision is committed; experts run projected gradient descent on
  the shared gradient g_t = grad f_t(x_t).
* lookahead mode (`run_hedge_prox`): the cost is available up front;
  experts take proximal steps with weight 1/eta, and the weights for the
  round are resolved by a damped fixed-point iteration because the loss
  references the gradient at the (weight-dependent) mix point.

The grid, the Hedge learning rate, and the closed-form regret bounds for
both modes live here too, so measured runs can be checked against their
guarantees without recomputing constants by hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, floor, log, log2, sqrt

import numpy as np

from .competitive import RunTrace, build_trace
from .costs import L2, CostFunction, switch_cost
from .geometry import Domain, as_point
from .solvers import prox_step

__all__ = [
    "StepGrid",
    "build_step_grid",
    "initial_weights",
    "meta_loss",
    "hedge_update",
    "path_length",
    "dynamic_regret_switching",
    "GradientStream",
    "FixedPointSettings",
    "run_hedge_ogd",
    "run_hedge_prox",
    "optimal_eta",
    "coverage_index",
    "regret_bound_standard",
    "regret_bound_lookahead",
    "expert_regret_bound_standard",
    "expert_regret_bound_lookahead",
]

MODES = ("standard", "lookahead")


@dataclass
class StepGrid:
    """Expert step sizes (ascending), Hedge rate, and the run constants.

    Built grids double the step size between neighbors and carry the
    horizon, diameter, and (standard mode only) gradient bound they were
    sized for. Hand-made grids may repeat a step size; that never happens
    for built ones but is useful in tests.
    """

    etas: np.ndarray
    beta: float
    T: int
    D: float
    G: float | None
    mode: str

    def __post_init__(self):
        self.etas = np.asarray(self.etas, dtype=float)
        if self.etas.ndim != 1 or self.etas.size < 1:
            raise ValueError("grid needs at least one step size")
        if np.any(self.etas <= 0) or np.any(np.diff(self.etas) < 0):
            raise ValueError("step sizes must be positive and ascending")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.T < 1:
            raise ValueError("horizon must be >= 1")
        if self.D <= 0:
            raise ValueError("diameter must be > 0")
        if self.mode not in MODES:
            raise ValueError(f"unknown grid mode: {self.mode!r}")
        if self.mode == "standard" and (self.G is None or self.G <= 0):
            raise ValueError("standard mode requires a positive gradient bound")

    @property
    def size(self) -> int:
        return int(self.etas.size)


def grid_size(T: int) -> int:
    """Number of experts needed to cover every possible comparator path."""
    return int(ceil(0.5 * log2(1 + 2 * T))) + 1


def build_step_grid(T: int, D: float, G: float | None = None, mode: str = "standard") -> StepGrid:
    """Geometric step-size grid plus the Hedge rate for the given mode."""
    if T < 1:
        raise ValueError("horizon must be >= 1")
    if D <= 0:
        raise ValueError("diameter must be > 0")
    if mode == "standard":
        if G is None or G <= 0:
            raise ValueError("standard mode requires a positive gradient bound")
        eta1 = sqrt(D * D / (T * (G * G + 2 * G)))
        beta = 2.0 / ((2 * G + 1) * D) * sqrt(2.0 / (5.0 * T))
    elif mode == "lookahead":
        if G is not None:
            raise ValueError("lookahead grids take no gradient bound")
        eta1 = sqrt(D * D / T)
        beta = (1.0 / D) * sqrt(2.0 / T)
    else:
        raise ValueError(f"unknown grid mode: {mode!r}")
    n = grid_size(T)
    etas = eta1 * np.exp2(np.arange(n))
    return StepGrid(etas=etas, beta=beta, T=int(T), D=float(D), G=G, mode=mode)


def initial_weights(n: int) -> np.ndarray:
    """Decreasing prior over experts, C / (i(i+1)) with C = 1 + 1/n."""
    if n < 1:
        raise ValueError("need at least one expert")
    i = np.arange(1, n + 1, dtype=float)
    c = 1.0 + 1.0 / n
    return c / (i * (i + 1.0))


def meta_loss(grad_at_x, x_t, expert_now, expert_prev) -> float:
    """Expert loss: linearized gap at the mix point plus the expert's movement."""
    grad_at_x = as_point(grad_at_x)
    x_t = as_point(x_t, dim=grad_at_x.size)
    expert_now = as_point(expert_now, dim=grad_at_x.size)
    expert_prev = as_point(expert_prev, dim=grad_at_x.size)
    return float(grad_at_x @ (expert_now - x_t)) + float(np.linalg.norm(expert_now - expert_prev))


def hedge_update(weights, losses, beta: float) -> np.ndarray:
    """Multiplicative update w * exp(-beta * loss), renormalized.

    The exponent is shifted so its largest entry is zero, which keeps the
    update overflow-safe for any beta * loss scale; the shift cancels in the
    normalization.
    """
    w = np.asarray(weights, dtype=float)
    l = np.asarray(losses, dtype=float)
    if w.size == 0:
        raise ValueError("empty weight vector")
    if w.shape != l.shape:
        raise ValueError("weights and losses must align")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    z = -beta * l
    z -= z.max()
    nw = w * np.exp(z)
    total = nw.sum()
    if total <= 0:
        raise ValueError("all weights vanished in the update")
    return nw / total


def path_length(seq, start) -> float:
    """Total movement of a comparator sequence, counted from `start`."""
    seq = np.atleast_2d(np.asarray(seq, dtype=float))
    if seq.shape[0] < 1:
        raise ValueError("empty comparator sequence")
    start = as_point(start, dim=seq.shape[1], name="start")
    moves = np.diff(np.vstack([start, seq]), axis=0)
    return float(np.sum(np.linalg.norm(moves, axis=1)))


def dynamic_regret_switching(
    trace: RunTrace,
    comparators,
    u0,
    costs: list[CostFunction],
    m_kind: str,
    include_comparator_switching: bool = False,
) -> float:
    """Algorithm total (hitting + movement) minus the comparator's cost.

    The comparator side charges hitting cost only, unless
    `include_comparator_switching` is set, in which case its movement under
    the same penalty is subtracted as well.
    """
    comparators = np.atleast_2d(np.asarray(comparators, dtype=float))
    T = trace.horizon
    if comparators.shape[0] != T or len(costs) != T:
        raise ValueError("trace, comparators, and costs must share one horizon")
    u0 = as_point(u0, dim=comparators.shape[1], name="u0")
    hit = np.array([costs[t].value(trace.decisions[t]) for t in range(T)])
    prev = trace.start
    sw = np.empty(T)
    for t in range(T):
        sw[t] = switch_cost(m_kind, trace.decisions[t], prev)
        prev = trace.decisions[t]
    alg = float(np.sum(hit)) + float(np.sum(sw))
    comp_hit = float(np.sum([costs[t].value(comparators[t]) for t in range(T)]))
    result = alg - comp_hit
    if include_comparator_switching:
        prev = u0
        comp_sw = np.empty(T)
        for t in range(T):
            comp_sw[t] = switch_cost(m_kind, comparators[t], prev)
            prev = comparators[t]
        result -= float(np.sum(comp_sw))
    return result


class GradientStream:
    """Cost stream that hides each round until its decision is committed.

    Standard-mode runs must not peek at f_t before choosing x_t; this
    wrapper enforces that by rejecting value/gradient queries for rounds
    that have not been committed yet.
    """

    def __init__(self, costs: list[CostFunction]):
        if not costs:
            raise ValueError("cost sequence is empty")
        self._costs = list(costs)
        self._revealed = 0

    @property
    def horizon(self) -> int:
        return len(self._costs)

    @property
    def costs(self) -> list[CostFunction]:
        return self._costs

    def commit(self, x_t) -> int:
        """Lock in the next round's decision; reveals that round's cost."""
        if self._revealed >= len(self._costs):
            raise RuntimeError("all rounds already committed")
        self._revealed += 1
        return self._revealed

    def _guard(self, t: int):
        if not 1 <= t <= len(self._costs):
            raise IndexError(f"round {t} out of range")
        if t > self._revealed:
            raise RuntimeError(f"round {t} not committed yet; its cost is still hidden")

    def value(self, t: int, x) -> float:
        self._guard(t)
        return self._costs[t - 1].value(x)

    def gradient(self, t: int, x) -> np.ndarray:
        self._guard(t)
        return self._costs[t - 1].subgradient(x)


def _resolve_start(domain: Domain, start) -> np.ndarray:
    if start is None:
        start = np.zeros(domain.dimension)
        if not domain.contains(start, tol=1e-9):
            raise ValueError("origin is infeasible; pass an explicit start")
        return start
    start = as_point(start, dim=domain.dimension, name="start")
    if not domain.contains(start, tol=1e-9):
        raise ValueError("start must be feasible")
    return start


def run_hedge_ogd(costs, domain: Domain, grid: StepGrid, start=None) -> RunTrace:
    """Hedge over projected-gradient experts; costs revealed after commit.

    Each round the experts submit their iterates, the mix point is played,
    and the observed gradient both reweights the experts (through the
    movement-aware loss) and drives every expert's projected step. The run
    starts from the origin unless `start` is given.
    """
    if grid.mode != "standard":
        raise ValueError("run_hedge_ogd needs a standard-mode grid")
    stream = costs if isinstance(costs, GradientStream) else GradientStream(list(costs))
    T = stream.horizon
    if T != grid.T:
        raise ValueError(f"grid sized for horizon {grid.T}, got {T} costs")
    start = _resolve_start(domain, start)
    d = domain.dimension
    n = grid.size

    X = np.tile(domain.center(), (n, 1))  # current expert iterates
    X_prev = np.tile(start, (n, 1))
    w = initial_weights(n)

    decisions = np.empty((T, d))
    weights_hist = np.empty((T, n))
    expert_hist = np.empty((T, n, d))
    losses_hist = np.empty((T, n))
    grads_hist = np.empty((T, d))

    for t in range(1, T + 1):
        x_t = w @ X
        stream.commit(x_t)
        g = np.asarray(stream.gradient(t, x_t), dtype=float)
        losses = (X - x_t) @ g + np.linalg.norm(X - X_prev, axis=1)

        decisions[t - 1] = x_t
        weights_hist[t - 1] = w
        expert_hist[t - 1] = X
        losses_hist[t - 1] = losses
        grads_hist[t - 1] = g

        w = hedge_update(w, losses, grid.beta)
        X_prev = X
        X = domain.project_many(X - np.outer(grid.etas, g))

    extras = {
        "mode": grid.mode,
        "etas": grid.etas.copy(),
        "beta": grid.beta,
        "D": grid.D,
        "G": grid.G,
        "initial_weights": initial_weights(n),
        "weights": weights_hist,
        "expert_points": expert_hist,
        "meta_losses": losses_hist,
        "gradients": grads_hist,
        "expert_start": start.copy(),
    }
    return build_trace(decisions, start, stream.costs, L2, extras=extras)


@dataclass
class FixedPointSettings:
    """Resolution of the weight/mix-point circularity in lookahead mode."""

    tolerance: float = 1e-10
    max_iterations: int = 50
    single_pass: bool = False

    def __post_init__(self):
        if self.tolerance <= 0 or self.max_iterations < 1:
            raise ValueError("invalid fixed-point settings")


def _prox_experts(f: CostFunction, X_prev: np.ndarray, etas: np.ndarray, domain: Domain, warnings: list, t: int):
    """One proximal step per expert, vectorized for the isotropic family."""
    from .costs import QuadraticCost

    if isinstance(f, QuadraticCost):
        gammas = (1.0 / etas)[:, None]
        target = (f.lam * f.v + gammas * X_prev) / (f.lam + gammas)
        return domain.project_many(target)
    X = np.empty_like(X_prev)
    for i, eta in enumerate(etas):
        res = prox_step(f, X_prev[i], 1.0 / eta, domain)
        if not res.converged:
            warnings.append(f"expert prox at round {t} (eta={eta:g}) hit the iteration budget")
        X[i] = res.x
    return X


def run_hedge_prox(
    costs: list[CostFunction],
    domain: Domain,
    grid: StepGrid,
    start=None,
    fixed_point: FixedPointSettings | None = None,
) -> RunTrace:
    """Hedge over proximal experts when the round's cost is known up front.

    The round's loss references the gradient at the mix point, but the mix
    point depends on the freshly updated weights; the loop below fixes that
    by iterating (mix, gradient, reweight) from the previous weights until
    the weights stop moving. `single_pass` keeps only the first iteration
    as a cheaper fallback. Non-convergence sets a trace warning and keeps
    the last iterate.
    """
    if grid.mode != "lookahead":
        raise ValueError("run_hedge_prox needs a lookahead-mode grid")
    costs = list(costs)
    T = len(costs)
    if T != grid.T:
        raise ValueError(f"grid sized for horizon {grid.T}, got {T} costs")
    start = _resolve_start(domain, start)
    fp = fixed_point or FixedPointSettings()
    d = domain.dimension
    n = grid.size

    X_prev = np.tile(start, (n, 1))
    w_prev = initial_weights(n)

    decisions = np.empty((T, d))
    weights_hist = np.empty((T, n))
    expert_hist = np.empty((T, n, d))
    losses_hist = np.empty((T, n))
    grads_hist = np.empty((T, d))
    fp_iters = np.zeros(T, dtype=int)
    fp_ok = np.ones(T, dtype=bool)
    warnings: list = []

    for t in range(1, T + 1):
        f = costs[t - 1]
        X = _prox_experts(f, X_prev, grid.etas, domain, warnings, t)
        expert_moves = np.linalg.norm(X - X_prev, axis=1)

        w_iter = w_prev
        losses = np.zeros(n)
        g = np.zeros(d)
        converged = fp.single_pass
        iterations = 0
        for _ in range(1 if fp.single_pass else fp.max_iterations):
            iterations += 1
            x_mix = w_iter @ X
            g = np.asarray(f.subgradient(x_mix), dtype=float)
            losses = (X - x_mix) @ g + expert_moves
            w_new = hedge_update(w_prev, losses, grid.beta)
            delta = float(np.sum(np.abs(w_new - w_iter)))
            w_iter = w_new
            if delta <= fp.tolerance:
                converged = True
                break
        if not converged:
            warnings.append(f"weight fixed point at round {t} stopped at the iteration cap")

        w_t = w_iter
        x_t = w_t @ X

        decisions[t - 1] = x_t
        weights_hist[t - 1] = w_t
        expert_hist[t - 1] = X
        losses_hist[t - 1] = losses
        grads_hist[t - 1] = g
        fp_iters[t - 1] = iterations
        fp_ok[t - 1] = converged

        w_prev = w_t
        X_prev = X

    extras = {
        "mode": grid.mode,
        "etas": grid.etas.copy(),
        "beta": grid.beta,
        "D": grid.D,
        "G": None,
        "initial_weights": initial_weights(n),
        "weights": weights_hist,
        "expert_points": expert_hist,
        "meta_losses": losses_hist,
        "gradients": grads_hist,
        "expert_start": start.copy(),
        "fp_iterations": fp_iters,
        "fp_converged": fp_ok,
    }
    return build_trace(decisions, start, costs, L2, extras=extras, warnings=warnings)


def optimal_eta(T: int, D: float, P_T: float, G: float | None = None, mode: str = "standard") -> float:
    """Step size minimizing the per-expert bound at a given path length."""
    if P_T < 0 or T < 1 or D <= 0:
        raise ValueError("invalid parameters")
    if mode == "standard":
        if G is None or G <= 0:
            raise ValueError("standard mode requires a positive gradient bound")
        return sqrt((D * D + 2 * D * P_T) / (T * (G * G + 2 * G)))
    if mode == "lookahead":
        return sqrt((D * D + 2 * D * P_T) / T)
    raise ValueError(f"unknown mode: {mode!r}")


def coverage_index(P_T: float, D: float) -> int:
    """1-based index of the grid step that nearly matches this path length."""
    if P_T < 0 or D <= 0:
        raise ValueError("invalid parameters")
    return int(floor(0.5 * log2(1 + 2 * P_T / D))) + 1


def regret_bound_standard(T: int, D: float, G: float, P_T: float) -> float:
    """Guarantee on total regret-with-movement for the gradient-feedback run."""
    if T < 1 or D <= 0 or G <= 0 or P_T < 0:
        raise ValueError("invalid parameters")
    k = coverage_index(P_T, D)
    expert_part = 1.5 * sqrt(T * (G * G + 2 * G) * (D * D + 2 * D * P_T))
    meta_part = (2 * G + 1) * D * sqrt(5.0 * T / 8.0) * (1 + 2 * log(k + 1))
    return expert_part + meta_part


def regret_bound_lookahead(T: int, D: float, P_T: float) -> float:
    """Guarantee for the lookahead run; needs no gradient bound."""
    if T < 1 or D <= 0 or P_T < 0:
        raise ValueError("invalid parameters")
    k = coverage_index(P_T, D)
    expert_part = 1.5 * sqrt(T * (D * D + 2 * D * P_T))
    meta_part = D * sqrt(T / 2.0) * (1 + 2 * log(k + 1))
    return expert_part + meta_part


def expert_regret_bound_standard(eta: float, T: int, D: float, G: float, P_T: float) -> float:
    """Per-expert guarantee (surrogate losses plus own movement)."""
    if eta <= 0 or T < 1 or D <= 0 or G <= 0 or P_T < 0:
        raise ValueError("invalid parameters")
    return D * D / (2 * eta) + (D / eta) * P_T + eta * T * (G * G / 2 + G)


def expert_regret_bound_lookahead(eta: float, T: int, D: float, P_T: float) -> float:
    """Per-expert guarantee for proximal experts under lookahead."""
    if eta <= 0 or T < 1 or D <= 0 or P_T < 0:
        raise ValueError("invalid parameters")
    return D * D / (2 * eta) + (D / eta) * P_T + eta * T / 2.0

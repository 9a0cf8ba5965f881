"""Instance generators, comparator builders, and experiment orchestration.

Everything here is reproducibility plumbing: a config document describes a
grid of (instance, algorithm, comparator) cells, each cell runs
deterministically from a seed derived by hashing (master seed, instance
index), and the result is one report row per cell. Per-cell failures become
error rows; the sweep keeps going.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt

import numpy as np

from .competitive import (
    greedy_ratio_bound,
    naive_ratio_bound,
    competitive_ratio,
    recommended_gamma,
    run_greedy,
    run_naive,
)
from .costs import (
    HALF_SQUARED_L2,
    L2,
    CostFunction,
    GeneralQuadraticCost,
    PolyhedralCost,
    QuadraticCost,
    cost_from_json,
    gradient_bound,
)
from .geometry import Ball, Box, Domain, as_point, domain_from_json
from .oracle import OracleResult, offline_optimal_convex, offline_optimal_grid_dp
from .regret import (
    build_step_grid,
    dynamic_regret_switching,
    path_length,
    regret_bound_lookahead,
    regret_bound_standard,
    run_hedge_ogd,
    run_hedge_prox,
)
from .solvers import SolverSettings

__all__ = [
    "ConfigError",
    "InstanceSpec",
    "ComparatorSpec",
    "generate_instance",
    "generate_comparators",
    "load_config",
    "run_experiment",
    "fit_scaling",
    "REPORT_COLUMNS",
]

MINIMIZER_PROCESSES = ("iid-uniform", "random-walk", "alternating-extremes", "stage-partitioned")
OFFSET_KINDS = ("zero", "iid-uniform")
COMPARATOR_KINDS = ("fixed-point", "lazy-tracking", "minimizer-tracking", "stage-partitioned")
RATIO_ALGOS = ("naive", "greedy")
REGRET_ALGOS = ("hedge-ogd", "hedge-prox")

REPORT_COLUMNS = [
    "cell_id",
    "seed",
    "family",
    "param",
    "T",
    "d",
    "algorithm",
    "total_cost",
    "oracle_cost",
    "ratio",
    "regret",
    "P_T",
    "bound",
    "bound_satisfied",
]


class ConfigError(ValueError):
    """Config document problem; the message names the offending key."""


def _require_keys(rec: dict, allowed: set, where: str):
    extra = sorted(set(rec) - allowed)
    if extra:
        raise ConfigError(f"unknown key {extra[0]!r} in {where}")


# ---------------------------------------------------------------------------
# instance generation
# ---------------------------------------------------------------------------


@dataclass
class InstanceSpec:
    """Recipe for one cost sequence (or a verbatim list of cost records)."""

    family: str
    param: float
    domain: Domain
    T: int
    minimizer_process: str = "iid-uniform"
    walk_sigma: float = 0.25
    stages: int = 4
    offsets: str = "zero"
    seed: int = 0
    switching: str | None = None
    start: np.ndarray | None = None
    curvature_spread: float = 4.0
    explicit_costs: list | None = None

    def default_switching(self) -> str:
        if self.switching is not None:
            return self.switching
        return L2 if self.family == "polyhedral-norm" else HALF_SQUARED_L2

    @staticmethod
    def from_json(rec: dict, index: int, master_seed: int) -> "InstanceSpec":
        where = f"instances[{index}]"
        _require_keys(
            rec,
            {
                "family",
                "param",
                "dimension",
                "domain",
                "T",
                "minimizer_process",
                "walk_sigma",
                "stages",
                "offsets",
                "seed",
                "switching",
                "start",
                "curvature_spread",
                "costs",
            },
            where,
        )
        if "domain" not in rec:
            raise ConfigError(f"missing key 'domain' in {where}")
        try:
            domain = domain_from_json(rec["domain"])
        except ValueError as exc:
            raise ConfigError(f"{where}.domain: {exc}") from exc
        if "dimension" in rec and int(rec["dimension"]) != domain.dimension:
            raise ConfigError(f"{where}.dimension disagrees with the domain")
        seed = int(rec["seed"]) if "seed" in rec else _derived_seed(master_seed, index)

        if "costs" in rec:
            try:
                costs = [cost_from_json(r) for r in rec["costs"]]
            except ValueError as exc:
                raise ConfigError(f"{where}.costs: {exc}") from exc
            if not costs:
                raise ConfigError(f"{where}.costs is empty")
            family = costs[0].family
            param = costs[0].param
            spec = InstanceSpec(
                family=family,
                param=param,
                domain=domain,
                T=len(costs),
                seed=seed,
                switching=rec.get("switching"),
                explicit_costs=costs,
            )
        else:
            for key in ("family", "param", "T"):
                if key not in rec:
                    raise ConfigError(f"missing key {key!r} in {where}")
            proc = rec.get("minimizer_process", "iid-uniform")
            if proc not in MINIMIZER_PROCESSES:
                raise ConfigError(f"{where}.minimizer_process: unknown value {proc!r}")
            offs = rec.get("offsets", "zero")
            if offs not in OFFSET_KINDS:
                raise ConfigError(f"{where}.offsets: unknown value {offs!r}")
            spec = InstanceSpec(
                family=rec["family"],
                param=float(rec["param"]),
                domain=domain,
                T=int(rec["T"]),
                minimizer_process=proc,
                walk_sigma=float(rec.get("walk_sigma", 0.25)),
                stages=int(rec.get("stages", 4)),
                offsets=offs,
                seed=seed,
                switching=rec.get("switching"),
                curvature_spread=float(rec.get("curvature_spread", 4.0)),
            )
            if spec.family not in ("polyhedral-norm", "quadratic", "general-quadratic"):
                raise ConfigError(f"{where}.family: unknown value {spec.family!r}")
            if spec.T < 1:
                raise ConfigError(f"{where}.T must be >= 1")
        if spec.switching is not None and spec.switching not in (L2, HALF_SQUARED_L2):
            raise ConfigError(f"{where}.switching: unknown value {spec.switching!r}")
        if "start" in rec:
            spec.start = as_point(rec["start"], dim=domain.dimension, name=f"{where}.start")
        return spec


def _derived_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _extreme_points(domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(domain, Box):
        return domain.upper.copy(), domain.lower.copy()
    if isinstance(domain, Ball):
        e1 = np.zeros(domain.dimension)
        e1[0] = domain.radius
        return domain.center() + e1, domain.center() - e1
    raise TypeError("unsupported domain type")


def _minimizer_path(spec: InstanceSpec, rng: np.random.Generator) -> np.ndarray:
    domain, T = spec.domain, spec.T
    if spec.minimizer_process == "iid-uniform":
        return np.stack([domain.sample(rng) for _ in range(T)])
    if spec.minimizer_process == "random-walk":
        v = domain.center()
        out = np.empty((T, domain.dimension))
        for t in range(T):
            v = domain.project(v + spec.walk_sigma * rng.standard_normal(domain.dimension))
            out[t] = v
        return out
    hi, lo = _extreme_points(domain)
    if spec.minimizer_process == "alternating-extremes":
        return np.stack([hi if t % 2 == 0 else lo for t in range(T)])
    # stage-partitioned: constant within each stage, extremes alternate across stages
    stage_len = max(1, ceil(T / max(1, spec.stages)))
    return np.stack([hi if (t // stage_len) % 2 == 0 else lo for t in range(T)])


def _random_curvature(dim: int, lam: float, spread: float, rng: np.random.Generator) -> np.ndarray:
    eigs = rng.uniform(lam, spread * lam, size=dim)
    eigs[0] = lam  # growth constant attained exactly along one direction
    if dim == 1:
        return np.array([[eigs[0]]])
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return (q * eigs) @ q.T


def generate_instance(spec: InstanceSpec) -> list[CostFunction]:
    """Materialize the cost sequence; deterministic for a given seed."""
    if spec.explicit_costs is not None:
        return list(spec.explicit_costs)
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    minimizers = _minimizer_path(spec, rng)
    if spec.offsets == "zero":
        offs = np.zeros(spec.T)
    else:
        offs = rng.uniform(0.0, 1.0, size=spec.T)
    costs: list[CostFunction] = []
    for t in range(spec.T):
        if spec.family == "polyhedral-norm":
            costs.append(PolyhedralCost(spec.param, minimizers[t], offs[t]))
        elif spec.family == "quadratic":
            costs.append(QuadraticCost(spec.param, minimizers[t], offs[t]))
        else:
            H = _random_curvature(spec.domain.dimension, spec.param, spec.curvature_spread, rng)
            costs.append(GeneralQuadraticCost(H, spec.param, minimizers[t], offs[t]))
    return costs


# ---------------------------------------------------------------------------
# comparator generation
# ---------------------------------------------------------------------------


@dataclass
class ComparatorSpec:
    """Comparator recipe; budgeted kinds never move more than `tau` in total."""

    kind: str
    tau: float = 0.0
    stage_length: int | None = None

    def __post_init__(self):
        if self.kind not in COMPARATOR_KINDS:
            raise ConfigError(f"unknown comparator kind: {self.kind!r}")
        if self.tau < 0:
            raise ConfigError("comparator budget must be >= 0")

    @staticmethod
    def from_json(rec: dict, index: int) -> "ComparatorSpec":
        where = f"comparators[{index}]"
        _require_keys(rec, {"kind", "tau", "stage_length"}, where)
        if "kind" not in rec:
            raise ConfigError(f"missing key 'kind' in {where}")
        sl = rec.get("stage_length")
        return ComparatorSpec(
            kind=rec["kind"],
            tau=float(rec.get("tau", 0.0)),
            stage_length=int(sl) if sl is not None else None,
        )

    def label(self) -> str:
        if self.kind in ("fixed-point", "minimizer-tracking"):
            return self.kind
        return f"{self.kind}-tau{self.tau:g}"


def generate_comparators(
    spec: ComparatorSpec,
    costs: list[CostFunction],
    domain: Domain,
    start,
) -> np.ndarray:
    """Feasible comparator sequence u_1..u_T; its path is counted from `start`."""
    start = as_point(start, dim=domain.dimension, name="start")
    T = len(costs)
    if spec.kind == "fixed-point":
        return np.tile(start, (T, 1))
    if spec.kind == "minimizer-tracking":
        return np.stack([domain.project(f.v) for f in costs])
    out = np.empty((T, domain.dimension))
    u = start.copy()
    remaining = spec.tau
    if spec.kind == "lazy-tracking":
        for t in range(T):
            target = domain.project(costs[t].v)
            gap = target - u
            dist = float(np.linalg.norm(gap))
            if dist > 0 and remaining > 0:
                step = min(dist, remaining)
                u = u + gap * (step / dist)
                remaining -= step
            out[t] = u
        return out
    # stage-partitioned: hold within a stage, jump to the stage's minimizer
    # at each boundary while budget remains
    stage_len = spec.stage_length or max(1, ceil(T / 4))
    for t in range(T):
        if t % stage_len == 0:
            target = domain.project(costs[t].v)
            dist = float(np.linalg.norm(target - u))
            if 0 < dist <= remaining:
                u = target
                remaining -= dist
        out[t] = u
    return out


# ---------------------------------------------------------------------------
# experiment configs
# ---------------------------------------------------------------------------


@dataclass
class AlgorithmSpec:
    name: str
    gamma: float | str = "auto"

    @staticmethod
    def from_json(rec: dict, index: int) -> "AlgorithmSpec":
        where = f"algorithms[{index}]"
        _require_keys(rec, {"name", "mode", "gamma"}, where)
        if "mode" in rec:
            if "name" in rec:
                raise ConfigError(f"{where}: give either 'name' or 'mode', not both")
            mode = rec["mode"]
            if mode == "standard":
                name = "hedge-ogd"
            elif mode == "lookahead":
                name = "hedge-prox"
            else:
                raise ConfigError(f"{where}.mode: unknown value {mode!r}")
        else:
            if "name" not in rec:
                raise ConfigError(f"missing key 'name' in {where}")
            name = rec["name"]
        if name not in RATIO_ALGOS + REGRET_ALGOS:
            raise ConfigError(f"{where}.name: unknown algorithm {name!r}")
        gamma = rec.get("gamma", "auto")
        if gamma != "auto":
            gamma = float(gamma)
            if gamma <= 0:
                raise ConfigError(f"{where}.gamma must be > 0")
        return AlgorithmSpec(name=name, gamma=gamma)


@dataclass
class OracleSpec:
    method: str = "grid-dp"
    points_per_axis: int = 1001
    max_pairs_per_stage: int = 1_000_000
    max_sweeps: int = 500
    tolerance: float = 1e-10

    @staticmethod
    def from_json(rec: dict) -> "OracleSpec":
        _require_keys(
            rec,
            {"method", "points_per_axis", "max_pairs_per_stage", "max_sweeps", "tolerance"},
            "oracle",
        )
        method = rec.get("method", "grid-dp")
        if method not in ("grid-dp", "joint-convex"):
            raise ConfigError(f"oracle.method: unknown value {method!r}")
        return OracleSpec(
            method=method,
            points_per_axis=int(rec.get("points_per_axis", 1001)),
            max_pairs_per_stage=int(rec.get("max_pairs_per_stage", 1_000_000)),
            max_sweeps=int(rec.get("max_sweeps", 500)),
            tolerance=float(rec.get("tolerance", 1e-10)),
        )


@dataclass
class ExperimentConfig:
    seed: int
    instances: list[InstanceSpec]
    algorithms: list[AlgorithmSpec]
    comparators: list[ComparatorSpec]
    oracle: OracleSpec | None
    solver: SolverSettings
    output_path: str | None
    plots: bool = False


def load_config(doc: dict) -> ExperimentConfig:
    """Validate a config document; unknown keys are hard errors."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    _require_keys(
        doc, {"seed", "instances", "algorithms", "comparators", "oracle", "solver", "output"}, "config"
    )
    seed = int(doc.get("seed", 0))
    inst_recs = doc.get("instances", [])
    if not isinstance(inst_recs, list):
        raise ConfigError("instances must be a list")
    instances = [InstanceSpec.from_json(r, i, seed) for i, r in enumerate(inst_recs)]
    algo_recs = doc.get("algorithms", [])
    if not isinstance(algo_recs, list) or not algo_recs:
        raise ConfigError("algorithms must be a non-empty list")
    algorithms = [AlgorithmSpec.from_json(r, i) for i, r in enumerate(algo_recs)]
    comp_recs = doc.get("comparators", [])
    if not isinstance(comp_recs, list):
        raise ConfigError("comparators must be a list")
    comparators = [ComparatorSpec.from_json(r, i) for i, r in enumerate(comp_recs)]
    oracle = None
    if doc.get("oracle") is not None:
        if not isinstance(doc["oracle"], dict):
            raise ConfigError("oracle must be an object or null")
        oracle = OracleSpec.from_json(doc["oracle"])
    try:
        solver = SolverSettings.from_json(doc.get("solver", {}))
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc
    output_path = None
    plots = False
    if "output" in doc:
        out = doc["output"]
        if not isinstance(out, dict):
            raise ConfigError("output must be an object")
        _require_keys(out, {"path", "plots"}, "output")
        output_path = out.get("path")
        plots = bool(out.get("plots", False))
    needs_comp = any(a.name in REGRET_ALGOS for a in algorithms)
    if needs_comp and not comparators:
        raise ConfigError("regret algorithms need at least one comparator")
    return ExperimentConfig(
        seed=seed,
        instances=instances,
        algorithms=algorithms,
        comparators=comparators,
        oracle=oracle,
        solver=solver,
        output_path=output_path,
        plots=plots,
    )


# ---------------------------------------------------------------------------
# cell execution
# ---------------------------------------------------------------------------


def _compute_oracle(
    spec: OracleSpec, costs, domain, start, m_kind, solver: SolverSettings
) -> OracleResult:
    if spec.method == "grid-dp":
        return offline_optimal_grid_dp(
            costs,
            domain,
            start,
            m_kind,
            points_per_axis=spec.points_per_axis,
            max_pairs_per_stage=spec.max_pairs_per_stage,
        )
    return offline_optimal_convex(
        costs,
        domain,
        start,
        m_kind,
        settings=solver,
        max_sweeps=spec.max_sweeps,
        sweep_tol=spec.tolerance,
    )


def _ratio_cell(
    inst: InstanceSpec,
    algo: AlgorithmSpec,
    costs,
    oracle_res: OracleResult | None,
    solver: SolverSettings,
) -> dict:
    domain = inst.domain
    start = inst.start if inst.start is not None else domain.center()
    m_kind = inst.default_switching()
    bound = None
    if algo.name == "naive":
        trace = run_naive(costs, domain, start, m_kind)
        matched = (inst.family == "polyhedral-norm" and m_kind == L2) or (
            inst.family in ("quadratic", "general-quadratic") and m_kind == HALF_SQUARED_L2
        )
        if matched:
            bound = naive_ratio_bound(inst.family, inst.param)
    else:
        if m_kind != HALF_SQUARED_L2:
            raise ValueError("the greedy rule needs the half-squared movement penalty")
        if algo.gamma == "auto":
            if inst.family == "polyhedral-norm":
                raise ValueError("no automatic gamma for linear-growth costs; set one explicitly")
            gamma = recommended_gamma(inst.param)
            bound = greedy_ratio_bound(inst.param)
        else:
            gamma = float(algo.gamma)
        trace = run_greedy(costs, domain, start, gamma, settings=solver)

    row = {
        "total_cost": trace.total,
        "oracle_cost": None,
        "ratio": None,
        "regret": None,
        "P_T": None,
        "bound": bound,
        "bound_satisfied": None,
    }
    if oracle_res is not None:
        row["oracle_cost"] = oracle_res.total
        ratio = competitive_ratio(trace.total, oracle_res.total)
        row["ratio"] = ratio
        if bound is not None:
            if oracle_res.total > 0:
                allowance = (oracle_res.slack if oracle_res.slack is not None else oracle_res.convergence_gap) or 0.0
                slack_ratio = allowance / oracle_res.total
            else:
                slack_ratio = 0.0
            row["bound_satisfied"] = bool(ratio <= bound + slack_ratio)
    return row


def _regret_cells(
    inst: InstanceSpec,
    algo: AlgorithmSpec,
    costs,
    comparators: list[ComparatorSpec],
) -> list[tuple[ComparatorSpec, dict]]:
    domain = inst.domain
    start = inst.start  # None means the origin
    D = domain.diameter()
    if algo.name == "hedge-ogd":
        G = max(gradient_bound(f, domain) for f in costs)
        grid = build_step_grid(inst.T, D, G, mode="standard")
        trace = run_hedge_ogd(costs, domain, grid, start=start)
    else:
        G = None
        grid = build_step_grid(inst.T, D, mode="lookahead")
        trace = run_hedge_prox(costs, domain, grid, start=start)
    u0 = trace.start
    out = []
    for comp in comparators:
        u = generate_comparators(comp, costs, domain, u0)
        p_t = path_length(u, u0)
        regret = dynamic_regret_switching(trace, u, u0, costs, L2, include_comparator_switching=False)
        if algo.name == "hedge-ogd":
            bound = regret_bound_standard(inst.T, D, G, p_t)
        else:
            bound = regret_bound_lookahead(inst.T, D, p_t)
        out.append(
            (
                comp,
                {
                    "total_cost": trace.total,
                    "oracle_cost": None,
                    "ratio": None,
                    "regret": regret,
                    "P_T": p_t,
                    "bound": bound,
                    "bound_satisfied": bool(regret <= bound),
                },
            )
        )
    return out


def _instance_rows(config: ExperimentConfig, i_idx: int, inst: InstanceSpec, log=None) -> list[dict]:
    rows: list[dict] = []
    costs = generate_instance(inst)
    m_kind = inst.default_switching()
    start = inst.start if inst.start is not None else inst.domain.center()
    oracle_res: OracleResult | None = None
    oracle_failed: Exception | None = None
    if config.oracle is not None and any(a.name in RATIO_ALGOS for a in config.algorithms):
        try:
            oracle_res = _compute_oracle(config.oracle, costs, inst.domain, start, m_kind, config.solver)
        except Exception as exc:  # recorded per dependent cell
            oracle_failed = exc
    for a_idx, algo in enumerate(config.algorithms):
        base = {
            "seed": inst.seed,
            "family": inst.family,
            "param": inst.param,
            "T": inst.T,
            "d": inst.domain.dimension,
            "algorithm": algo.name,
            "_instance": i_idx,
            "_algorithm": a_idx,
        }
        if algo.name in RATIO_ALGOS:
            cell_id = f"i{i_idx:03d}.{algo.name}"
            try:
                if oracle_failed is not None:
                    raise oracle_failed
                body = _ratio_cell(inst, algo, costs, oracle_res, config.solver)
            except Exception as exc:
                if log:
                    log(f"cell {cell_id} failed: {exc}")
                body = _error_body()
            rows.append({**base, "cell_id": cell_id, "_comparator": None, **body})
        else:
            try:
                produced = _regret_cells(inst, algo, costs, config.comparators)
                for c_idx, (comp, body) in enumerate(produced):
                    cell_id = f"i{i_idx:03d}.{algo.name}.c{c_idx:02d}-{comp.label()}"
                    rows.append({**base, "cell_id": cell_id, "_comparator": comp.kind, **body})
            except Exception as exc:
                if log:
                    log(f"cell i{i_idx:03d}.{algo.name} failed: {exc}")
                for c_idx, comp in enumerate(config.comparators):
                    cell_id = f"i{i_idx:03d}.{algo.name}.c{c_idx:02d}-{comp.label()}"
                    rows.append(
                        {**base, "cell_id": cell_id, "_comparator": comp.kind, **_error_body()}
                    )
    return rows


def run_experiment(config: ExperimentConfig, log=None, jobs: int = 1) -> list[dict]:
    """Run every cell and return report rows ordered by (instance, algorithm).

    Rows carry the public report columns plus underscore-prefixed metadata
    (comparator kind, indices) that the CSV writer drops. A cell failure
    produces a row with `bound_satisfied = "error"` and the sweep continues.
    Instances are independent, so `jobs > 1` fans them out over worker
    threads; assembly order (and therefore the CSV) does not depend on
    scheduling.
    """
    items = list(enumerate(config.instances))
    if jobs > 1 and len(items) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
            chunks = list(pool.map(lambda it: _instance_rows(config, it[0], it[1], log), items))
    else:
        chunks = [_instance_rows(config, i, inst, log) for i, inst in items]
    return [row for chunk in chunks for row in chunk]


def _error_body() -> dict:
    return {
        "total_cost": None,
        "oracle_cost": None,
        "ratio": None,
        "regret": None,
        "P_T": None,
        "bound": None,
        "bound_satisfied": "error",
    }


def fit_scaling(rows) -> float:
    """Largest regret / sqrt(T * (1 + P_T)) over the rows: the empirical
    leading constant of the square-root scaling."""
    values = []
    for row in rows:
        T = row["T"]
        if T is None or T <= 0:
            raise ValueError("rows need a positive horizon")
        p_t = row["P_T"] or 0.0
        regret = row["regret"]
        if regret is None:
            continue
        values.append(regret / sqrt(T * (1.0 + p_t)))
    if not values:
        raise ValueError("no usable rows")
    return max(values)

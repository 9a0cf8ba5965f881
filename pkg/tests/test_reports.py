import numpy as np

from socobench.costs import HALF_SQUARED_L2, QuadraticCost, gradient_bound
from socobench.geometry import Box
from socobench.oracle import offline_optimal_grid_dp
from socobench.regret import build_step_grid, run_hedge_ogd
from socobench.reports import format_value, oracle_to_csv, report_to_csv, trace_to_csv


def test_format_value():
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(False) == "false"
    assert format_value(np.float64(0.5)) == "0.5"
    assert format_value(float("inf")) == "inf"
    assert format_value(np.int64(7)) == "7"
    assert format_value("error") == "error"


def test_report_csv_header_and_rows():
    rows = [
        {
            "cell_id": "i000.naive",
            "seed": 1,
            "family": "quadratic",
            "param": 1.0,
            "T": 10,
            "d": 1,
            "algorithm": "naive",
            "total_cost": 2.5,
            "oracle_cost": 2.0,
            "ratio": 1.25,
            "regret": None,
            "P_T": None,
            "bound": 5.0,
            "bound_satisfied": True,
            "_instance": 0,
        }
    ]
    text = report_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == (
        "cell_id,seed,family,param,T,d,algorithm,total_cost,oracle_cost,"
        "ratio,regret,P_T,bound,bound_satisfied"
    )
    assert lines[1] == "i000.naive,1,quadratic,1.0,10,1,naive,2.5,2.0,1.25,,,5.0,true"


def test_trace_csv_includes_expert_columns():
    dom = Box([-1.0], [1.0])
    rng = np.random.default_rng(0)
    costs = [QuadraticCost(1.0, rng.uniform(-1, 1, 1)) for _ in range(5)]
    G = max(gradient_bound(f, dom) for f in costs)
    grid = build_step_grid(5, dom.diameter(), G)
    trace = run_hedge_ogd(costs, dom, grid)
    text = trace_to_csv(trace)
    header = text.splitlines()[0].split(",")
    assert header[:5] == ["t", "x", "hitting", "switching", "cumulative_total"]
    n = grid.size
    assert header[5 : 5 + n] == [f"weight_eta_{i + 1}" for i in range(n)]
    assert header[5 + n :] == [f"expert_{i + 1}_x" for i in range(n)]
    rows = text.splitlines()[1:]
    assert len(rows) == 5
    # cumulative column adds up the per-round split
    last = rows[-1].split(",")
    assert float(last[4]) == float(np.sum(trace.hitting) + np.sum(trace.switching))

    plain = trace_to_csv(trace, include_extras=False)
    assert plain.splitlines()[0] == "t,x,hitting,switching,cumulative_total"


def test_oracle_csv_mirrors_trace_export():
    dom = Box([-1.0], [1.0])
    rng = np.random.default_rng(1)
    costs = [QuadraticCost(1.0, rng.uniform(-1, 1, 1)) for _ in range(4)]
    res = offline_optimal_grid_dp(costs, dom, [0.0], HALF_SQUARED_L2, 101)
    text = oracle_to_csv(res, costs, np.zeros(1), HALF_SQUARED_L2)
    lines = text.splitlines()
    assert lines[0].endswith("method,grid_resolution,convergence_gap")
    assert len(lines) == 5
    assert all(",grid-dp,101," in line for line in lines[1:])
    # cumulative total of the exported sequence matches the oracle total
    assert float(lines[-1].split(",")[4]) == float(res.total) or abs(
        float(lines[-1].split(",")[4]) - res.total
    ) < 1e-9

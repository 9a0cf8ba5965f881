"""CSV writers for report rows, run traces, and oracle results.

Output is byte-stable for a fixed config and seed: floats are written with
Python's shortest-roundtrip repr, rows are pre-ordered by the harness, and
newlines are pinned to "\n".
"""

from __future__ import annotations

import csv
import io
from math import isinf, isnan

import numpy as np

from .competitive import RunTrace
from .harness import REPORT_COLUMNS
from .oracle import OracleResult

__all__ = ["format_value", "report_to_csv", "write_report", "trace_to_csv", "oracle_to_csv"]


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if isnan(value):
            return "nan"
        if isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


def report_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([format_value(row.get(col)) for col in REPORT_COLUMNS])
    return buf.getvalue()


def write_report(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(report_to_csv(rows))


def _coords(point: np.ndarray) -> str:
    return ";".join(format_value(float(v)) for v in np.atleast_1d(point))


def trace_to_csv(trace: RunTrace, include_extras: bool = True) -> str:
    """Per-round trace: t, x, hitting, switching, cumulative_total.

    When the trace carries expert state and `include_extras` is set, one
    weight column per expert and one (semicolon-joined) iterate column per
    expert are appended.
    """
    header = ["t", "x", "hitting", "switching", "cumulative_total"]
    extras = trace.extras if include_extras else None
    n_experts = 0
    if extras and "weights" in extras:
        n_experts = extras["weights"].shape[1]
        header += [f"weight_eta_{i + 1}" for i in range(n_experts)]
        header += [f"expert_{i + 1}_x" for i in range(n_experts)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    cumulative = 0.0
    for t in range(trace.horizon):
        cumulative += float(trace.hitting[t]) + float(trace.switching[t])
        row = [
            str(t + 1),
            _coords(trace.decisions[t]),
            format_value(float(trace.hitting[t])),
            format_value(float(trace.switching[t])),
            format_value(cumulative),
        ]
        if n_experts:
            row += [format_value(float(w)) for w in extras["weights"][t]]
            row += [_coords(extras["expert_points"][t][i]) for i in range(n_experts)]
        writer.writerow(row)
    return buf.getvalue()


def oracle_to_csv(result: OracleResult, costs, start, m_kind: str) -> str:
    """Mirror of the trace export for the oracle's sequence, plus the
    method, grid_resolution, and convergence_gap columns."""
    from .costs import switch_cost

    header = [
        "t",
        "x",
        "hitting",
        "switching",
        "cumulative_total",
        "method",
        "grid_resolution",
        "convergence_gap",
    ]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    prev = np.asarray(start, dtype=float)
    cumulative = 0.0
    for t in range(result.sequence.shape[0]):
        point = result.sequence[t]
        hit = costs[t].value(point)
        sw = switch_cost(m_kind, point, prev)
        cumulative += hit + sw
        writer.writerow(
            [
                str(t + 1),
                _coords(point),
                format_value(hit),
                format_value(sw),
                format_value(cumulative),
                result.method,
                format_value(result.grid_resolution),
                format_value(result.convergence_gap),
            ]
        )
        prev = point
    return buf.getvalue()

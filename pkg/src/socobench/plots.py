"""Optional figure rendering for report rows.

The CSV is the contract; these figures are a convenience view written next
to it when plotting is requested. Import of matplotlib stays inside the
functions so headless report-only runs never pay for it.
"""

from __future__ import annotations

import os
from collections import defaultdict

__all__ = ["render_report_figures"]


def _savefig(fig, path: str) -> None:
    fig.savefig(path, dpi=150, bbox_inches="tight")


def _ratio_figure(plt, rows):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    by_algo = defaultdict(list)
    for row in rows:
        if row.get("ratio") is not None:
            by_algo[row["algorithm"]].append(row)
    for algo, group in sorted(by_algo.items()):
        group = sorted(group, key=lambda r: (r["param"], r["cell_id"]))
        ax.plot(
            [r["param"] for r in group],
            [r["ratio"] for r in group],
            "o",
            ms=4,
            alpha=0.7,
            label=f"{algo} (measured)",
        )
        bounded = [(r["param"], r["bound"]) for r in group if r.get("bound") is not None]
        if bounded:
            seen = sorted(set(bounded))
            ax.plot([p for p, _ in seen], [b for _, b in seen], "k--", lw=1, label=f"{algo} bound")
    ax.set_xlabel("class parameter")
    ax.set_ylabel("total cost / offline optimal")
    ax.set_xscale("log")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return fig


def _regret_figure(plt, rows):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    by_key = defaultdict(list)
    for row in rows:
        if row.get("regret") is not None:
            by_key[(row["algorithm"], row.get("_comparator") or "")].append(row)
    for (algo, comp), group in sorted(by_key.items()):
        group = sorted(group, key=lambda r: r["T"])
        label = f"{algo} / {comp}" if comp else algo
        ax.plot([r["T"] for r in group], [r["regret"] for r in group], "o-", ms=4, alpha=0.7, label=label)
        ax.plot(
            [r["T"] for r in group],
            [r["bound"] for r in group],
            "k--",
            lw=0.8,
            alpha=0.5,
        )
    ax.set_xlabel("horizon T")
    ax.set_ylabel("regret with movement (dashed: guarantee)")
    ax.set_xscale("log")
    ax.set_yscale("symlog")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    return fig


def render_report_figures(rows: list[dict], csv_path: str) -> list[str]:
    """Render ratio/regret figures next to the CSV; returns written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stem, _ = os.path.splitext(csv_path)
    written = []
    if any(r.get("ratio") is not None for r in rows):
        fig = _ratio_figure(plt, rows)
        path = f"{stem}_ratio.png"
        _savefig(fig, path)
        plt.close(fig)
        written.append(path)
    if any(r.get("regret") is not None for r in rows):
        fig = _regret_figure(plt, rows)
        path = f"{stem}_regret.png"
        _savefig(fig, path)
        plt.close(fig)
        written.append(path)
    return written

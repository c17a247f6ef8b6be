"""SVG summaries of grid rows, each written next to a CSV of the plotted table."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("runtime_vs_space", "coverage_bars")


def _runtime_table(rows):
    table = []
    for r in rows:
        if r.get("error") or r.get("n_compatible") is None or r.get("runtime_sec") is None:
            continue
        table.append({"method": r["method"], "n_compatible": int(r["n_compatible"]),
                      "runtime_sec": float(r["runtime_sec"])})
    table.sort(key=lambda t: (t["method"], t["n_compatible"], t["runtime_sec"]))
    return table


def _coverage_table(rows):
    table = []
    for method in sorted({r["method"] for r in rows}):
        ok = [r for r in rows if r["method"] == method and not r.get("error")]
        pc = [r["point_coverage"] for r in ok if r.get("point_coverage") is not None]
        bc = [r["bound_coverage"] for r in ok if r.get("bound_coverage") is not None]
        table.append({"method": method,
                      "point_coverage": float(np.mean(pc)) if pc else float("nan"),
                      "bound_coverage": float(np.mean(bc)) if bc else float("nan"),
                      "n": len(ok)})
    return table


def _draw_runtime(ax, table):
    for method in sorted({t["method"] for t in table}):
        pts = [t for t in table if t["method"] == method]
        ax.plot([t["n_compatible"] for t in pts], [t["runtime_sec"] for t in pts],
                marker="o", linestyle="none", label=method)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("number of compatible graphs")
    ax.set_ylabel("runtime [s]")
    ax.legend()


def _draw_coverage(ax, table):
    x = np.arange(len(table))
    ax.bar(x - 0.2, [t["point_coverage"] for t in table], width=0.4, label="point coverage")
    ax.bar(x + 0.2, [t["bound_coverage"] for t in table], width=0.4, label="bound coverage")
    ax.set_xticks(x, [t["method"] for t in table])
    ax.set_ylim(0, 1.05)
    ax.legend()


def emit_plot(rows: list[dict], kind: str, out_svg) -> tuple[Path, Path]:
    """Write ``out_svg`` and ``out_svg`` with a ``.csv`` suffix; byte-identical for equal rows."""
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {KINDS}")
    if not rows:
        raise ValueError("no rows to plot")
    table = _runtime_table(rows) if kind == "runtime_vs_space" else _coverage_table(rows)
    if not table:
        raise ValueError(f"rows carry no data for {kind}")
    out_svg = Path(out_svg)
    out_csv = out_svg.with_suffix(".csv")
    with open(out_csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(table[0]))
        w.writeheader()
        w.writerows(table)
    with plt.rc_context({"svg.hashsalt": "dagbounds", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        (_draw_runtime if kind == "runtime_vs_space" else _draw_coverage)(ax, table)
        fig.tight_layout()
        fig.savefig(out_svg, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out_svg, out_csv

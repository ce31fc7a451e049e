"""Optional report figures written next to the CSVs (``--plots``).

The CSVs are the contract; figures are a convenience and use the
non-interactive Agg backend.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _checks_figure(plt, res):
    rows = [r for r in res.rows if r[8] == "criterion"]
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(rows) + 1.2))
    y = np.arange(len(rows))
    vals = np.array([abs(r[4]) for r in rows], float)
    thr = np.array([abs(r[6]) for r in rows], float)
    # value over threshold on a log axis; below 1 means the check passes for "<" rows
    ratio = np.where(thr > 0, vals / np.where(thr > 0, thr, 1.0), np.nan)
    ratio = np.clip(ratio, 1e-17, None)
    colors = ["tab:green" if r[7] else "tab:red" for r in rows]
    ax.barh(y, ratio, color=colors)
    ax.axvline(1.0, color="k", lw=0.8)
    ax.set_xscale("log")
    ax.set_yticks(y)
    ax.set_yticklabels([f"{r[1]} [{r[2]}: {r[3]}]" for r in rows], fontsize=6)
    ax.set_xlabel("|value| / |threshold|")
    ax.set_title(res.name)
    fig.tight_layout()
    return fig


def _decay_figure(plt, res):
    d = res.extra["decay"]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(d["r"], d["l1"], "o-", ms=3)
    ax.set_xlabel("r")
    ax.set_ylabel(r"$\|\phi(rL)\psi\|_1$")
    ax.set_title(d["label"])
    fig.tight_layout()
    return fig


def _sweep_figure(plt, res):
    h = res.header
    eps = [r[h.index("epsilon")] for r in res.rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(eps, [r[h.index("fixed_order_error")] for r in res.rows], "o-", label="fixed order")
    ax.loglog(eps, [r[h.index("reconstruction_error")] for r in res.rows], "s-", label="to tolerance")
    ax.loglog(eps, [r[h.index("defect")] for r in res.rows], "^--", label="defect")
    ax.set_xlabel(r"$\varepsilon$")
    ax.legend()
    ax.set_title(res.name)
    fig.tight_layout()
    return fig


def render(res, out_dir) -> list:
    """Write the figures for ``res`` into ``out_dir``; returns the written paths."""
    plt = _pyplot()
    out_dir = Path(out_dir)
    figs = []
    if "decay" in res.extra:
        figs.append(("decay", _decay_figure(plt, res)))
    if res.name == "frame-sweep":
        figs.append(("errors", _sweep_figure(plt, res)))
    if res.header and res.header[0] == "criterion":
        figs.append(("checks", _checks_figure(plt, res)))
    paths = []
    for tag, fig in figs:
        if fig is None:
            continue
        p = out_dir / f"{res.name}-{tag}.png"
        fig.savefig(p, dpi=110)
        plt.close(fig)
        paths.append(p)
    return paths

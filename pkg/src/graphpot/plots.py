"""Figure rendering for report data.

Figures are written next to the report files when plotting is requested;
they are a visual companion to the JSON/CSV output, which stays the
authoritative artifact.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.collections import LineCollection
from matplotlib.patches import Circle


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_capacity_sequence(levels, fit, path, title="capacity upper bounds"):
    """Log-log decay plot of a capacity sequence with its fitted model."""
    ns = [l["n"] for l in levels]
    vals = [l["value"] for l in levels]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.loglog(ns, vals, "o-", label="computed bound")
    if fit is not None:
        import numpy as np
        xs = np.geomspace(min(ns), max(ns), 64)
        if fit.model == "power_law":
            ys = fit.params["prefactor"] * xs ** (-fit.params["alpha"])
            lbl = f"fit: c n^(-{fit.params['alpha']:.2f})"
        else:
            ys = fit.params["coefficient"] / np.log(xs)
            lbl = f"fit: {fit.params['coefficient']:.2f}/log n"
        ax.loglog(xs, ys, "--", label=lbl)
    ax.set_xlabel("truncation radius")
    ax.set_ylabel("effective capacity")
    ax.set_title(title)
    ax.legend()
    return _finish(fig, path)


def plot_stabilization(report, path):
    """Sup-norm and energy increments of the harmonic parts across levels."""
    rows = report.levels
    fig, ax = plt.subplots(figsize=(5.5, 4))
    if rows:
        ns = [r["n"] for r in rows]
        ax.semilogy(ns, [max(r["sup_diff"], 1e-300) for r in rows], "o-",
                    label="sup difference")
        ax.semilogy(ns, [max(r["energy_diff"], 1e-300) for r in rows], "s--",
                    label="energy difference")
    ax.set_xlabel("level")
    ax.set_ylabel("increment")
    ax.set_title("harmonic part stabilization"
                 + (" (stabilized)" if report.stabilized else ""))
    ax.legend()
    return _finish(fig, path)


def plot_packing(packing, graph, path, anchors=(), potential=None):
    """Discs, contact edges, anchors, and an optional vertex potential."""
    fig, ax = plt.subplots(figsize=(6, 6))
    if potential is not None:
        vals = [potential[v] for v in graph.vertices]
        lo, hi = min(vals), max(vals)
        span = (hi - lo) or 1.0
        cmap = plt.get_cmap("viridis")
    for i, v in enumerate(packing.ids):
        face = "none"
        if potential is not None and v in graph._index:
            face = cmap((potential[v] - lo) / span)
        ax.add_patch(Circle(packing.centers[i], packing.radii[i],
                            facecolor=face, edgecolor="steelblue", lw=0.4))
    segs = []
    for u, v, _ in graph.edges():
        segs.append([packing.centers[packing.index[u]],
                     packing.centers[packing.index[v]]])
    ax.add_collection(LineCollection(segs, colors="gray", lw=0.3))
    for a in anchors:
        ax.plot([a.point[0]], [a.point[1]], "r*", ms=10)
    ax.set_aspect("equal")
    ax.autoscale_view()
    ax.set_title(f"{len(packing)} discs, {graph.num_edges} contacts")
    return _finish(fig, path)


def plot_cesaro(reports, path):
    """Per-anchor Cesàro capacity bounds against averaging depth."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for rep in reports:
        depths = [e.depth for e in rep.entries]
        vals = [e.value for e in rep.entries]
        if depths:
            ax.semilogy(depths, vals, "o-", label=rep.anchor, lw=1)
    ax.set_xlabel("averaging depth")
    ax.set_ylabel("capacity upper bound")
    ax.set_title("boundary anchor capacity decay")
    if len(reports) <= 10:
        ax.legend(fontsize=7)
    return _finish(fig, path)

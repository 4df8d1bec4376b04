"""Matplotlib figure rendering for the report-producing CLI paths."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .workspace import Heatmap


def render_heatmap_figure(heatmap: Heatmap, path: str | Path,
                          free_fraction: float | None = None) -> Path:
    """Reachability heat map: target points colored by normalized count.

    Two projections (front and side of the bore) share one color scale.
    """
    targets = heatmap.targets
    pct = heatmap.percentage
    order = np.argsort(pct)   # draw hot points on top
    fig, axes = plt.subplots(1, 2, figsize=(11, 5))
    views = [("x (m)", "y (m)", targets[:, 0], targets[:, 1], "front (down the bore)"),
             ("z (m)", "y (m)", targets[:, 2], targets[:, 1], "side")]
    for ax, (xl, yl, xs, ys, title) in zip(axes, views):
        sc = ax.scatter(xs[order], ys[order], c=pct[order], cmap="inferno",
                        s=14, vmin=0.0, vmax=100.0)
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
        ax.set_title(title)
        ax.set_aspect("equal")
    fig.colorbar(sc, ax=axes, label="% of most-populated target")
    bits = [f"targets: {len(targets)}", f"radius: {heatmap.radius * 1e3:g} mm",
            f"max count: {heatmap.max_count}"]
    if free_fraction is not None:
        bits.append(f"collision-free fraction: {free_fraction:.1%}")
    fig.suptitle("Collision-free reachability  (" + ", ".join(bits) + ")")
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_statics_figure(report: dict, path: str | Path) -> Path:
    """Torque demands vs. ratings plus the stiffness budget, as bars."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    tau = report["torque_bounds_nm"]
    checks = [c for c in report["rating"].checks if "torque" in c.name]
    names = [c.name for c in checks]
    ax1.bar(names, [c.limit for c in checks], color="0.85", label="rating")
    ax1.bar(names, [c.demand for c in checks], width=0.5, color="tab:red",
            label="demand (incl. gravity margin)")
    ax1.set_ylabel("torque (N*m)")
    ax1.set_title(f"needle thrust {report['thrust_n']:g} N: "
                  f"bounds {tau[0]:g} / {tau[1]:g} / {tau[2]:g} N*m")
    ax1.legend()
    k = report["stiffness_n_per_mm"]
    ax2.bar(["tip stiffness"], [k], color="tab:blue")
    ax2.axhline(1.55, color="tab:red", linestyle="--", label="1.55 N/mm floor")
    ax2.set_ylabel("N/mm")
    ax2.set_title(f"{k:.2f} N/mm  ({report['deflection_mm_per_n']:.3f} mm/N)")
    ax2.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path

"""Scenario plots: lanes grey, agent history orange, ground truth red, predictions green."""
from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import torch  # noqa: E402

from .data import collate  # noqa: E402
from .goicrop import GOAL_AREA_RADIUS  # noqa: E402
from .scene import Scenario  # noqa: E402

COLORS = {"lane": "grey", "past": "orange", "gt": "red", "pred": "green", "anchor": "blue"}


def _check_writable(path: Path) -> None:
    parent = path.parent if str(path.parent) else Path(".")
    if path.is_dir():
        raise OSError(f"{path}: is a directory")
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise OSError(f"{path}: output location is not writable")


def plot_scenario(
    scenario: Scenario,
    trajectories=None,
    scores=None,
    anchor=None,
    radius: float = GOAL_AREA_RADIUS,
    ax=None,
):
    """Draw one (normalized) scenario; returns the axes."""
    if ax is None:
        _, ax = plt.subplots(figsize=(7, 7))
    g = scenario.lane_graph
    centers = g.centers()
    for k, lane in enumerate(g.lanes):
        idx = g.lane_nodes(lane.lane_id)
        pts = centers[idx] if idx else np.asarray(lane.centerline)
        ax.plot(pts[:, 0], pts[:, 1], color=COLORS["lane"], lw=1.0, alpha=0.8,
                label="lanes" if k == 0 else None, zorder=1)
    agent = scenario.agent
    past, pv = agent.observed_array()
    ax.plot(past[pv, 0], past[pv, 1], color=COLORS["past"], lw=2.0, label="past", zorder=3)
    if agent.future:
        fut, fv = agent.future_array()
        ax.plot(fut[fv, 0], fut[fv, 1], color=COLORS["gt"], lw=2.0, label="ground truth", zorder=3)
    if trajectories is not None:
        order = np.argsort(-np.asarray(scores), kind="stable") if scores is not None else range(len(trajectories))
        for rank, k in enumerate(order):
            t = np.asarray(trajectories[k])
            name = f"prediction {rank + 1}"
            if scores is not None:
                name += f" ({float(scores[k]):.2f})"
            ax.plot(t[:, 0], t[:, 1], color=COLORS["pred"], lw=1.2, alpha=0.9, label=name, zorder=2)
            ax.scatter(t[-1, 0], t[-1, 1], color=COLORS["pred"], s=10, zorder=2)
    if anchor is not None:
        ax.add_patch(plt.Circle(tuple(anchor), radius, color=COLORS["anchor"], alpha=0.15, zorder=0,
                                label=f"goal area ({radius:g} m)"))
        ax.scatter([anchor[0]], [anchor[1]], marker="*", s=120, color=COLORS["anchor"], label="anchor", zorder=4)
    ax.set_aspect("equal")
    ax.set_title(scenario.scenario_id)
    ax.legend(loc="best", fontsize=7)
    return ax


def visualize(model, scenario: Scenario, tensors, path) -> Path:
    """Run ``model`` on one prepared scenario and save the plot to ``path``.

    ``scenario`` must be in the same (normalized) frame as ``tensors``.
    """
    path = Path(path)
    _check_writable(path)
    batch = collate([tensors])
    model.eval()
    with torch.no_grad():
        out = model(batch)
    a = int(batch.agent_index[0])
    anchor = out["anchors"][a].double().numpy() if "anchors" in out else None
    fig, ax = plt.subplots(figsize=(7, 7))
    try:
        plot_scenario(scenario, out["trajectories"][a].double().numpy(), out["scores"][a].double().numpy(),
                      anchor, model.cfg.goal_area_radius, ax=ax)
        fig.savefig(path, dpi=110, bbox_inches="tight")
    finally:
        plt.close(fig)
    return path

"""Distance-gated attention over entities inside a radius of an anchor point.

The same operator serves three purposes: the actor/lane fusion passes of the
backbone, goal-area aggregation of lane-node features around a predicted
anchor, and future interaction between actors through their anchors.
"""
from __future__ import annotations

import numpy as np
import torch
from torch import Tensor, nn

GOAL_AREA_RADIUS = 6.0
INTERACTION_RADIUS = 100.0


def crop_neighbors(anchor, candidates, radius: float, exclude: int | None = None) -> np.ndarray:
    """Indices ``j`` with ``|anchor - candidates[j]| <= radius`` (inclusive), ascending.

    ``exclude`` drops one index, used by the actor-actor variant to skip the
    querying actor itself.
    """
    cand = np.asarray(candidates, dtype=np.float64).reshape(-1, 2)
    d = np.hypot(*(cand - np.asarray(anchor, dtype=np.float64)).T)
    idx = np.flatnonzero(d <= radius)
    if exclude is not None:
        idx = idx[idx != exclude]
    return idx


def radius_pairs(
    query_pos: Tensor,
    query_batch: Tensor,
    key_pos: Tensor,
    key_batch: Tensor,
    radius: float,
    exclude_self: bool = False,
) -> tuple[Tensor, Tensor]:
    """All (query i, key j) pairs within ``radius`` that belong to the same scenario.

    Pair selection is discrete and carries no gradient; distances are taken on
    detached coordinates.
    """
    if query_pos.shape[0] == 0 or key_pos.shape[0] == 0:
        empty = torch.zeros(0, dtype=torch.long, device=query_pos.device)
        return empty, empty
    with torch.no_grad():
        d = torch.cdist(query_pos.detach().double(), key_pos.detach().double())
        mask = (d <= radius) & (query_batch[:, None] == key_batch[None, :])
        if exclude_self:
            n = min(mask.shape)
            mask[torch.arange(n), torch.arange(n)] = False
        i, j = torch.nonzero(mask, as_tuple=True)
    return i, j


def canonical_order(i: Tensor, j: Tensor, anchors: Tensor, positions: Tensor, y: Tensor) -> tuple[Tensor, Tensor]:
    """Reorder pairs by (query, offset x, offset y, feature sum).

    The order depends on neighbor values rather than their storage index, so
    permuting the neighbor set feeds bit-identical tensors to every later op
    and the floating-point sum is exactly permutation invariant.
    """
    with torch.no_grad():
        rel = (anchors[i] - positions[j]).double()
        keys = (y[j].double().sum(-1), rel[:, 1], rel[:, 0], i)
        order = torch.arange(i.numel(), device=i.device)
        for k in keys:  # least significant first; stable sorts compose lexicographically
            order = order[torch.sort(k[order], stable=True).indices]
    return i[order], j[order]


def ln_relu(dim: int) -> nn.Sequential:
    return nn.Sequential(nn.LayerNorm(dim), nn.ReLU())


class GoICrop(nn.Module):
    """``x'_i = phi1(x_i W0 + sum_j phi2([x_i W1, delta_ij, y_j] W2)) W3``.

    ``delta_ij = phi(MLP(v_i - v_j))`` embeds the offset from the query anchor to
    each neighbor. phi is layer norm followed by ReLU; aggregation is a plain
    sum, so an empty neighbor set reduces to ``phi1(x_i W0) W3``.
    """

    def __init__(self, dim: int, ctx_dim: int | None = None):
        super().__init__()
        ctx_dim = dim if ctx_dim is None else ctx_dim
        self.w0 = nn.Linear(dim, dim, bias=False)
        self.w1 = nn.Linear(dim, dim, bias=False)
        self.delta = nn.Sequential(nn.Linear(2, dim), ln_relu(dim), nn.Linear(dim, dim), ln_relu(dim))
        self.w2 = nn.Linear(2 * dim + ctx_dim, dim, bias=False)
        self.phi2 = ln_relu(dim)
        self.phi1 = ln_relu(dim)
        self.w3 = nn.Linear(dim, dim, bias=False)

    def forward(self, x: Tensor, anchors: Tensor, y: Tensor, positions: Tensor,
                pairs: tuple[Tensor, Tensor]) -> Tensor:
        i, j = pairs
        agg = self.w0(x)
        if i.numel():
            i, j = canonical_order(i, j, anchors, positions, y)
            q = self.w1(x[i])
            dlt = self.delta(anchors[i] - positions[j])
            msg = self.phi2(self.w2(torch.cat([q, dlt, y[j]], dim=-1)))
            agg = agg.index_add(0, i, msg)
        return self.w3(self.phi1(agg))


def apply_goal_area_crop(
    x: Tensor,
    anchors: Tensor,
    actor_batch: Tensor,
    y: Tensor,
    lane_positions: Tensor,
    node_batch: Tensor,
    crop: GoICrop,
    radius: float = GOAL_AREA_RADIUS,
    residual: bool = True,
) -> Tensor:
    """Update each actor with lane-node features inside its goal area."""
    pairs = radius_pairs(anchors, actor_batch, lane_positions, node_batch, radius)
    out = crop(x, anchors, y, lane_positions, pairs)
    return x + out if residual else out


def apply_future_interaction(
    x: Tensor,
    anchors: Tensor,
    actor_batch: Tensor,
    crop: GoICrop,
    radius: float = INTERACTION_RADIUS,
    residual: bool = True,
) -> Tensor:
    """Actor-actor aggregation keyed by predicted anchors (self excluded)."""
    pairs = radius_pairs(anchors, actor_batch, anchors, actor_batch, radius, exclude_self=True)
    out = crop(x, anchors, x, anchors, pairs)
    return x + out if residual else out

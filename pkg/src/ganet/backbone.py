"""Context encoders producing actor features X and lane-node features Y.

Three variants share the ``(batch) -> (X, Y)`` contract:

* ``lanegcn-lite``: 1D CNN + feature pyramid over actor histories, multi-scale
  LaneConv over the lane graph, then actor/lane fusion.
* ``lanegcn++-lite``: as above with two parallel actor branches, each running an
  LSTM over the pyramid output (hidden state seeded from the actor position).
* ``polyline-lite``: per-polyline self-attention, actor/lane cross-attention and
  global attention, followed by a LaneConv head so Y stays node-granular.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import Tensor, nn

from .data import Batch
from .goicrop import GoICrop, radius_pairs

VARIANTS = ("lanegcn-lite", "lanegcn++-lite", "polyline-lite")


@dataclass
class BackboneConfig:
    variant: str = "lanegcn-lite"
    d_hidden: int = 64
    scales: tuple[int, ...] = (1, 2, 4, 8)
    temporal_depth: int = 3
    map_depth: int = 2
    fusion_depth: int = 1
    actor_to_lane_radius: float = 7.0
    lane_to_actor_radius: float = 6.0
    actor_to_actor_radius: float = 100.0
    num_heads: int = 4

    def __post_init__(self):
        self.scales = tuple(int(s) for s in self.scales)
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown backbone variant {self.variant!r}")
        if self.d_hidden <= 0:
            raise ValueError("d_hidden must be > 0")
        if min(self.actor_to_lane_radius, self.lane_to_actor_radius, self.actor_to_actor_radius) <= 0:
            raise ValueError("fusion radii must be > 0")


class Res1d(nn.Module):
    def __init__(self, n_in: int, n_out: int, stride: int = 1):
        super().__init__()
        self.conv1 = nn.Conv1d(n_in, n_out, 3, stride, 1, bias=False)
        self.conv2 = nn.Conv1d(n_out, n_out, 3, 1, 1, bias=False)
        self.bn1 = nn.GroupNorm(1, n_out)
        self.bn2 = nn.GroupNorm(1, n_out)
        if stride != 1 or n_in != n_out:
            self.down = nn.Sequential(nn.Conv1d(n_in, n_out, 1, stride, bias=False), nn.GroupNorm(1, n_out))
        else:
            self.down = None

    def forward(self, x):
        out = F.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        res = x if self.down is None else self.down(x)
        return F.relu(out + res)


class ActorNet(nn.Module):
    """Temporal CNN with a feature pyramid; returns the full (N, D, T') map."""

    def __init__(self, d: int, depth: int = 3, n_in: int = 3):
        super().__init__()
        widths = [max(d // 2, 8)] + [d] * (depth - 1)
        self.groups = nn.ModuleList()
        c = n_in
        for k, w in enumerate(widths):
            self.groups.append(Res1d(c, w, stride=1 if k == 0 else 2))
            c = w
        self.lateral = nn.ModuleList(
            [nn.Sequential(nn.Conv1d(w, d, 1, bias=False), nn.GroupNorm(1, d)) for w in widths]
        )
        self.output = Res1d(d, d)

    def forward(self, x: Tensor) -> Tensor:
        feats = []
        for g in self.groups:
            x = g(x)
            feats.append(x)
        out = self.lateral[-1](feats[-1])
        for k in range(len(feats) - 2, -1, -1):
            out = F.interpolate(out, size=feats[k].shape[-1], mode="linear", align_corners=False)
            out = out + self.lateral[k](feats[k])
        return self.output(out)


class ActorNetLSTM(nn.Module):
    def __init__(self, d: int, depth: int):
        super().__init__()
        self.cnn = ActorNet(d, depth)
        self.init_h = nn.Sequential(nn.Linear(2, d), nn.ReLU(), nn.Linear(d, d))
        self.lstm = nn.LSTM(d, d, batch_first=True)

    def forward(self, x: Tensor, ctrs: Tensor) -> Tensor:
        seq = self.cnn(x).transpose(1, 2)
        h0 = self.init_h(ctrs)[None]
        _, (h, _) = self.lstm(seq, (h0, torch.zeros_like(h0)))
        return h[0]


class LaneConv(nn.Module):
    """One multi-dilation graph convolution layer with a residual connection."""

    def __init__(self, d: int, relations: list[str]):
        super().__init__()
        self.relations = list(relations)
        self.center = nn.Linear(d, d, bias=False)
        self.fuse = nn.ModuleDict({r: nn.Linear(d, d, bias=False) for r in self.relations})
        self.norm = nn.LayerNorm(d)
        self.out = nn.Linear(d, d, bias=False)
        self.out_norm = nn.LayerNorm(d)

    def forward(self, feat: Tensor, edges: dict[str, Tensor]) -> Tensor:
        temp = self.center(feat)
        for r in self.relations:
            e = edges.get(r)
            if e is None or e.shape[1] == 0:
                continue
            temp = temp.index_add(0, e[0], self.fuse[r](feat[e[1]]))
        out = self.out_norm(self.out(F.relu(self.norm(temp))))
        return F.relu(out + feat)


def map_relations(scales) -> list[str]:
    return [f"{r}{s}" for s in scales for r in ("pre", "suc")] + ["left", "right"]


class MapNet(nn.Module):
    def __init__(self, d: int, scales, depth: int):
        super().__init__()
        self.input = nn.Sequential(nn.Linear(2, d), nn.ReLU(), nn.Linear(d, d))
        self.seg = nn.Sequential(nn.Linear(2, d), nn.ReLU(), nn.Linear(d, d))
        self.norm = nn.LayerNorm(d)
        self.layers = nn.ModuleList([LaneConv(d, map_relations(scales)) for _ in range(depth)])

    def forward(self, ctrs: Tensor, feats: Tensor, edges: dict[str, Tensor]) -> Tensor:
        if ctrs.shape[0] == 0:
            raise ValueError("empty lane graph")
        y = F.relu(self.norm(self.input(ctrs) + self.seg(feats)))
        for layer in self.layers:
            y = layer(y, edges)
        return y


class Fusion(nn.Module):
    """actor->lane, lane->lane, lane->actor, actor->actor, each residual."""

    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        d = cfg.d_hidden
        self.cfg = cfg
        self.a2m = GoICrop(d)
        self.m2m = nn.ModuleList([LaneConv(d, map_relations(cfg.scales)) for _ in range(cfg.fusion_depth)])
        self.m2a = GoICrop(d)
        self.a2a = GoICrop(d)

    def forward(self, x, y, actor_ctrs, actor_batch, node_ctrs, node_batch, edges):
        cfg = self.cfg
        pairs = radius_pairs(node_ctrs, node_batch, actor_ctrs, actor_batch, cfg.actor_to_lane_radius)
        y = y + self.a2m(y, node_ctrs, x, actor_ctrs, pairs)
        for layer in self.m2m:
            y = layer(y, edges)
        pairs = radius_pairs(actor_ctrs, actor_batch, node_ctrs, node_batch, cfg.lane_to_actor_radius)
        x = x + self.m2a(x, actor_ctrs, y, node_ctrs, pairs)
        pairs = radius_pairs(actor_ctrs, actor_batch, actor_ctrs, actor_batch, cfg.actor_to_actor_radius,
                             exclude_self=True)
        x = x + self.a2a(x, actor_ctrs, x, actor_ctrs, pairs)
        return x, y


class LaneGCNLite(nn.Module):
    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_hidden
        self.plus = cfg.variant == "lanegcn++-lite"
        if self.plus:
            self.branches = nn.ModuleList([ActorNetLSTM(d, cfg.temporal_depth) for _ in range(2)])
            self.merge = nn.Sequential(nn.Linear(2 * d, d), nn.LayerNorm(d), nn.ReLU())
        else:
            self.actor_net = ActorNet(d, cfg.temporal_depth)
        self.map_net = MapNet(d, cfg.scales, cfg.map_depth)
        self.fusion = Fusion(cfg)

    def encode_actors(self, batch: Batch) -> Tensor:
        if batch.actor_input.shape[0] and not bool(batch.actor_obs_valid.any(dim=1).all()):
            raise ValueError("actor track with zero valid points")
        if self.plus:
            return self.merge(torch.cat([b(batch.actor_input, batch.actor_ctrs) for b in self.branches], dim=-1))
        return self.actor_net(batch.actor_input)[:, :, -1]

    def encode_map(self, batch: Batch) -> Tensor:
        return self.map_net(batch.node_ctrs, batch.node_feats, batch.edges)

    def fuse(self, x: Tensor, y: Tensor, batch: Batch) -> tuple[Tensor, Tensor]:
        return self.fusion(x, y, batch.actor_ctrs, batch.actor_batch, batch.node_ctrs, batch.node_batch,
                           batch.edges)

    def forward(self, batch: Batch) -> tuple[Tensor, Tensor]:
        return self.fuse(self.encode_actors(batch), self.encode_map(batch), batch)


# ---------------------------------------------------------------- polyline variant

def group_pairs(group: Tensor, mask: Tensor | None = None) -> tuple[Tensor, Tensor]:
    """All (i, j) with ``group[i] == group[j]``; optionally only keys where ``mask[j]``."""
    g = group.cpu().numpy()
    order = np.argsort(g, kind="stable")
    gs = g[order]
    bounds = np.flatnonzero(np.diff(gs)) + 1
    qi, kj = [], []
    for blk in np.split(order, bounds):
        if len(blk) == 0:
            continue
        keys = blk if mask is None else blk[mask.cpu().numpy()[blk]]
        qi.append(np.repeat(blk, len(keys)))
        kj.append(np.tile(keys, len(blk)))
    if not qi:
        return torch.zeros(0, dtype=torch.long), torch.zeros(0, dtype=torch.long)
    return torch.as_tensor(np.concatenate(qi)), torch.as_tensor(np.concatenate(kj))


class SparseAttention(nn.Module):
    """Multi-head dot-product attention over an explicit (query, key) pair list."""

    def __init__(self, d: int, heads: int):
        super().__init__()
        self.h = heads
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        self.o = nn.Linear(d, d)
        self.norm1 = nn.LayerNorm(d)
        self.ffn = nn.Sequential(nn.Linear(d, 2 * d), nn.ReLU(), nn.Linear(2 * d, d))
        self.norm2 = nn.LayerNorm(d)

    def forward(self, x: Tensor, ctx: Tensor, pairs: tuple[Tensor, Tensor]) -> Tensor:
        qi, kj = pairs
        n, d = x.shape
        dh = d // self.h
        att = torch.zeros_like(x)
        if qi.numel():
            q = self.q(x).view(n, self.h, dh)[qi]
            k = self.k(ctx).view(-1, self.h, dh)[kj]
            v = self.v(ctx).view(-1, self.h, dh)[kj]
            logits = (q * k).sum(-1) / math.sqrt(dh)
            mx = torch.full((n, self.h), -torch.inf, dtype=x.dtype)
            mx = mx.scatter_reduce(0, qi[:, None].expand_as(logits), logits.detach(), "amax")
            e = torch.exp(logits - mx[qi])
            den = torch.zeros((n, self.h), dtype=x.dtype).index_add(0, qi, e)
            w = e / den[qi]
            att = torch.zeros((n, self.h, dh), dtype=x.dtype).index_add(0, qi, w[..., None] * v).view(n, d)
        x = self.norm1(x + self.o(att))
        return self.norm2(x + self.ffn(x))


class PolylineLite(nn.Module):
    def __init__(self, cfg: BackboneConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.d_hidden
        self.actor_embed = nn.Sequential(nn.Linear(6, d), nn.LayerNorm(d), nn.ReLU(), nn.Linear(d, d))
        self.node_embed = nn.Sequential(nn.Linear(6, d), nn.LayerNorm(d), nn.ReLU(), nn.Linear(d, d))
        self.actor_self = SparseAttention(d, cfg.num_heads)
        self.lane_self = SparseAttention(d, cfg.num_heads)
        self.a2l = SparseAttention(d, cfg.num_heads)
        self.l2a = SparseAttention(d, cfg.num_heads)
        self.glob = SparseAttention(d, cfg.num_heads)
        self.map_net = MapNet(d, cfg.scales, cfg.map_depth)
        self.node_head = nn.Sequential(nn.Linear(2 * d, d), nn.LayerNorm(d), nn.ReLU())

    @staticmethod
    def _max_pool(feat: Tensor, group: Tensor, n: int, mask: Tensor | None = None) -> Tensor:
        if mask is not None:
            feat = feat.masked_fill(~mask[:, None], -torch.inf)
        out = torch.full((n, feat.shape[1]), -torch.inf, dtype=feat.dtype)
        out = out.scatter_reduce(0, group[:, None].expand_as(feat), feat, "amax")
        return out.masked_fill(torch.isinf(out), 0.0)

    def encode_actors(self, batch: Batch) -> Tensor:
        n, t = batch.actor_obs_valid.shape
        if n and not bool(batch.actor_obs_valid.any(dim=1).all()):
            raise ValueError("actor track with zero valid points")
        steps = torch.linspace(0.0, 1.0, t, dtype=batch.actor_obs.dtype).expand(n, t)
        vec = torch.cat([batch.actor_obs, batch.actor_input[:, :3].transpose(1, 2), steps[..., None]], dim=-1)
        flat = self.actor_embed(vec.reshape(n * t, -1))
        group = torch.arange(n).repeat_interleave(t)
        valid = batch.actor_obs_valid.reshape(-1)
        flat = self.actor_self(flat, flat, group_pairs(group, valid))
        return self._max_pool(flat, group, n, valid)

    def _lanes(self, batch: Batch) -> tuple[Tensor, Tensor]:
        n_lanes = int(batch.lane_batch.shape[0])
        lane_len = torch.zeros(n_lanes, dtype=batch.node_ctrs.dtype).index_add(
            0, batch.node_lane, torch.ones_like(batch.node_ctrs[:, 0]))
        pos = batch.node_pos.to(batch.node_ctrs.dtype)
        ln = lane_len[batch.node_lane]
        vec = torch.cat([batch.node_ctrs, batch.node_feats, (pos / ln)[:, None], (ln / 50.0)[:, None]], dim=-1)
        emb = self.node_embed(vec)
        nodes = self.lane_self(emb, emb, group_pairs(batch.node_lane))
        return nodes, self._max_pool(nodes, batch.node_lane, n_lanes)

    def encode_map(self, batch: Batch) -> Tensor:
        return self.map_net(batch.node_ctrs, batch.node_feats, batch.edges)

    def forward(self, batch: Batch) -> tuple[Tensor, Tensor]:
        x = self.encode_actors(batch)
        nodes, lanes = self._lanes(batch)
        n_a = x.shape[0]
        a2l = torch.nonzero(batch.lane_batch[:, None] == batch.actor_batch[None, :], as_tuple=True)
        lanes = self.a2l(lanes, x, a2l)
        l2a = torch.nonzero(batch.actor_batch[:, None] == batch.lane_batch[None, :], as_tuple=True)
        x = self.l2a(x, lanes, l2a)
        allf = torch.cat([x, lanes])
        gb = torch.cat([batch.actor_batch, batch.lane_batch])
        allf = self.glob(allf, allf, group_pairs(gb))
        x, lanes = allf[:n_a], allf[n_a:]
        y = self.encode_map(batch)
        y = self.node_head(torch.cat([y + nodes, lanes[batch.node_lane]], dim=-1))
        return x, y


def make_backbone(cfg: BackboneConfig) -> nn.Module:
    if cfg.variant == "polyline-lite":
        return PolylineLite(cfg)
    return LaneGCNLite(cfg)

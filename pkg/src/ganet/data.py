"""Scenario -> tensor conversion and batching by concatenation with index offsets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import Tensor

from .scene import Scenario

RELATIONS = ("pre", "suc")


@dataclass
class ScenarioTensors:
    scenario_id: str
    actor_input: np.ndarray  # (N, 3, T') channels dx, dy, valid
    actor_obs: np.ndarray  # (N, T', 2), zero where invalid
    actor_obs_valid: np.ndarray  # (N, T')
    actor_ctrs: np.ndarray  # (N, 2) latest valid observed position
    gt: np.ndarray  # (N, T, 2)
    gt_valid: np.ndarray  # (N, T)
    node_ctrs: np.ndarray  # (M, 2)
    node_feats: np.ndarray  # (M, 2) direction * segment length
    node_lane: np.ndarray  # (M,) lane index within scenario
    node_pos: np.ndarray  # (M,) position of the node along its lane
    num_lanes: int
    edges: dict[str, np.ndarray]  # "suc1", "pre2", "left", ... -> (2, E) rows (u, v)
    agent_index: int


def _adj_edges(adj) -> np.ndarray:
    u = [i for i, row in enumerate(adj) for _ in row]
    v = [j for row in adj for j in row]
    return np.array([u, v], dtype=np.int64).reshape(2, -1)


def tensorize(s: Scenario, pred_len: int | None = None) -> ScenarioTensors:
    """Model inputs for one (normalized) scenario.

    Displacement channels are nonzero only where both the step and its
    predecessor are valid; invalid positions never enter any channel other
    than the mask.
    """
    obs, valid = [], []
    for a in s.actors:
        p, v = a.observed_array()
        if not v.any():
            raise ValueError(f"scenario {s.scenario_id}: actor {a.actor_id} has no valid observed point")
        obs.append(p)
        valid.append(v)
    obs = np.stack(obs)
    valid = np.stack(valid)
    both = valid[:, 1:] & valid[:, :-1]
    disp = np.zeros_like(obs)
    disp[:, 1:] = np.where(both[..., None], obs[:, 1:] - obs[:, :-1], 0.0)
    actor_input = np.concatenate([disp, valid[..., None].astype(np.float64)], axis=-1).transpose(0, 2, 1)
    last = valid.shape[1] - 1 - np.argmax(valid[:, ::-1], axis=1)
    ctrs = obs[np.arange(len(obs)), last]

    T = s.pred_len if pred_len is None else pred_len
    gt = np.zeros((len(s.actors), T, 2))
    gt_valid = np.zeros((len(s.actors), T), dtype=bool)
    for n, a in enumerate(s.actors):
        if a.future:
            p, v = a.future_array()
            k = min(T, len(p))
            gt[n, :k], gt_valid[n, :k] = p[:k], v[:k]

    g = s.lane_graph
    lane_index = {ln.lane_id: k for k, ln in enumerate(g.lanes)}
    node_lane = np.array([lane_index[n.lane_id] for n in g.nodes], dtype=np.int64)
    node_pos = np.zeros(len(g.nodes), dtype=np.int64)
    seen: dict[int, int] = {}
    for k, ln in enumerate(node_lane):
        node_pos[k] = seen.get(int(ln), 0)
        seen[int(ln)] = node_pos[k] + 1
    edges = {}
    for s_ in g.scales:
        edges[f"suc{s_}"] = _adj_edges(g.suc[s_])
        edges[f"pre{s_}"] = _adj_edges(g.pre[s_])
    edges["left"] = _adj_edges(g.left)
    edges["right"] = _adj_edges(g.right)
    lengths = np.array([n.length for n in g.nodes], dtype=np.float64)
    return ScenarioTensors(
        scenario_id=s.scenario_id,
        actor_input=actor_input,
        actor_obs=obs,
        actor_obs_valid=valid,
        actor_ctrs=ctrs,
        gt=gt,
        gt_valid=gt_valid,
        node_ctrs=g.centers(),
        node_feats=g.directions() * lengths[:, None],
        node_lane=node_lane,
        node_pos=node_pos,
        num_lanes=len(g.lanes),
        edges=edges,
        agent_index=s.agent_index,
    )


@dataclass
class Batch:
    scenario_ids: list[str]
    actor_input: Tensor
    actor_obs: Tensor
    actor_obs_valid: Tensor
    actor_ctrs: Tensor
    actor_batch: Tensor
    gt: Tensor
    gt_valid: Tensor
    node_ctrs: Tensor
    node_feats: Tensor
    node_batch: Tensor
    node_lane: Tensor  # global lane index across the batch
    node_pos: Tensor
    lane_batch: Tensor
    edges: dict[str, Tensor] = field(default_factory=dict)
    agent_index: Tensor = None  # (B,) global actor rows of the agents

    @property
    def num_scenarios(self) -> int:
        return len(self.scenario_ids)

    def to(self, dtype: torch.dtype) -> "Batch":
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.to(dtype) if isinstance(v, Tensor) and v.is_floating_point() else v
        return Batch(**out)


def collate(items: list[ScenarioTensors], dtype: torch.dtype = torch.float32) -> Batch:
    a_off = n_off = l_off = 0
    actor_batch, node_batch, lane_batch, node_lane, agent = [], [], [], [], []
    edges: dict[str, list[np.ndarray]] = {}
    keys = set.intersection(*[set(it.edges) for it in items])
    for b, it in enumerate(items):
        n_a, n_n = len(it.actor_ctrs), len(it.node_ctrs)
        actor_batch.append(np.full(n_a, b))
        node_batch.append(np.full(n_n, b))
        lane_batch.append(np.full(it.num_lanes, b))
        node_lane.append(it.node_lane + l_off)
        agent.append(it.agent_index + a_off)
        for k in keys:
            edges.setdefault(k, []).append(it.edges[k] + n_off)
        a_off += n_a
        n_off += n_n
        l_off += it.num_lanes

    def cat(name, dt=dtype):
        return torch.as_tensor(np.concatenate([getattr(it, name) for it in items]), dtype=dt)

    return Batch(
        scenario_ids=[it.scenario_id for it in items],
        actor_input=cat("actor_input"),
        actor_obs=cat("actor_obs"),
        actor_obs_valid=cat("actor_obs_valid", torch.bool),
        actor_ctrs=cat("actor_ctrs"),
        actor_batch=torch.as_tensor(np.concatenate(actor_batch), dtype=torch.long),
        gt=cat("gt"),
        gt_valid=cat("gt_valid", torch.bool),
        node_ctrs=cat("node_ctrs"),
        node_feats=cat("node_feats"),
        node_batch=torch.as_tensor(np.concatenate(node_batch), dtype=torch.long),
        node_lane=torch.as_tensor(np.concatenate(node_lane), dtype=torch.long),
        node_pos=cat("node_pos", torch.long),
        lane_batch=torch.as_tensor(np.concatenate(lane_batch), dtype=torch.long),
        edges={k: torch.as_tensor(np.concatenate(v, axis=1), dtype=torch.long) for k, v in edges.items()},
        agent_index=torch.as_tensor(agent, dtype=torch.long),
    )

"""Goal prediction: E endpoint goals with confidences, an optional middle goal,
anchor selection and the goal-stage losses."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import Tensor, nn

from .goicrop import ln_relu
from .losses import MARGIN, max_margin, nearest_index, reg

ALPHA1, BETA1, RHO1 = 1.0, 0.2, 0.1


class LinearRes(nn.Module):
    def __init__(self, d: int):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(d, d), nn.LayerNorm(d), nn.ReLU(), nn.Linear(d, d), nn.LayerNorm(d))

    def forward(self, x):
        return torch.relu(self.net(x) + x)


class EndpointScorer(nn.Module):
    """Score each candidate endpoint from the actor feature and its offset.

    Endpoints are detached: scores learn to rank candidates without pushing
    the regressed coordinates around.
    """

    def __init__(self, d: int):
        super().__init__()
        self.dist = nn.Sequential(nn.Linear(2, d), ln_relu(d), nn.Linear(d, d), ln_relu(d))
        self.agt = nn.Sequential(nn.Linear(2 * d, d), ln_relu(d))
        self.cls = nn.Sequential(LinearRes(d), nn.Linear(d, 1))

    def forward(self, x: Tensor, ctrs: Tensor, endpoints: Tensor) -> Tensor:
        n, c, _ = endpoints.shape
        off = self.dist((endpoints.detach() - ctrs[:, None]).reshape(n * c, 2))
        h = self.agt(torch.cat([x.repeat_interleave(c, dim=0), off], dim=-1))
        return self.cls(h).view(n, c)


@dataclass
class GoalSet:
    goals: np.ndarray  # (E, 2)
    confidences: np.ndarray  # (E,)
    anchor_index: int


def anchor_index(confidences: Tensor) -> Tensor:
    """Argmax over the last axis, lowest index on ties."""
    best = confidences.max(dim=-1, keepdim=True).values
    return torch.argmax((confidences == best).to(torch.int64), dim=-1)


class GoalHead(nn.Module):
    """Regression branch for E goals and a classification branch for their scores."""

    def __init__(self, d: int, num_goals: int):
        super().__init__()
        self.num_goals = num_goals
        self.reg = nn.Sequential(LinearRes(d), nn.Linear(d, 2 * num_goals))
        self.scorer = EndpointScorer(d) if num_goals > 1 else None

    def forward(self, x: Tensor, ctrs: Tensor) -> tuple[Tensor, Tensor]:
        goals = self.reg(x).view(-1, self.num_goals, 2) + ctrs[:, None]
        if self.scorer is None:
            conf = torch.zeros(goals.shape[:2], dtype=goals.dtype)
        else:
            conf = self.scorer(x, ctrs, goals)
        return goals, conf


class MidGoalHead(nn.Module):
    def __init__(self, d: int):
        super().__init__()
        self.net = nn.Sequential(LinearRes(d), nn.Linear(d, 2))

    def forward(self, x: Tensor, ctrs: Tensor) -> Tensor:
        return self.net(x) + ctrs


def predict_goals(head: GoalHead, x: Tensor, ctrs: Tensor) -> list[GoalSet]:
    with torch.no_grad():
        goals, conf = head(x, ctrs)
        idx = anchor_index(conf)
    return [GoalSet(g.numpy(), c.numpy(), int(i)) for g, c, i in zip(goals, conf, idx)]


def select_positive_goal(goals: Tensor, gt_endpoint: Tensor) -> Tensor:
    return nearest_index(goals, gt_endpoint)


def loss_goal_cls(confidences: Tensor, positive: Tensor, margin: float = MARGIN) -> Tensor:
    return max_margin(confidences, positive, margin)


def loss_goal_reg(goals: Tensor, positive: Tensor, gt_endpoint: Tensor) -> Tensor:
    if goals.shape[0] == 0:
        return goals.sum() * 0.0
    g = goals[torch.arange(goals.shape[0]), positive]
    return reg(g - gt_endpoint).mean()


def loss_mid_reg(mid_goal: Tensor, gt_mid: Tensor) -> Tensor:
    if mid_goal.shape[0] == 0:
        return mid_goal.sum() * 0.0
    return reg(mid_goal - gt_mid).mean()


def mid_step(pred_len: int) -> int:
    """0-based row of the middle future step, i.e. step ceil(T/2)."""
    return -(-pred_len // 2) - 1


def loss_stage1(cls_end=0.0, reg_end=0.0, reg_mid=0.0, alpha=ALPHA1, beta=BETA1, rho=RHO1):
    return alpha * cls_end + beta * reg_end + rho * reg_mid

"""Multimodal trajectory decoding, positive-mode selection and trajectory losses."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import Tensor, nn

from .goal_head import EndpointScorer, LinearRes
from .losses import MARGIN, max_margin, nearest_index, reg

ALPHA2, BETA2, RHO2 = 2.0, 1.0, 1.0


@dataclass
class Forecast:
    trajectories: np.ndarray  # (K, T, 2)
    scores: np.ndarray  # (K,)


class TrajectoryDecoder(nn.Module):
    def __init__(self, d: int, num_modes: int, pred_len: int):
        super().__init__()
        self.num_modes = num_modes
        self.pred_len = pred_len
        self.modes = nn.ModuleList(
            [nn.Sequential(LinearRes(d), nn.Linear(d, 2 * pred_len)) for _ in range(num_modes)]
        )
        self.scorer = EndpointScorer(d)

    def forward(self, x: Tensor, ctrs: Tensor) -> tuple[Tensor, Tensor]:
        traj = torch.stack([m(x).view(-1, self.pred_len, 2) for m in self.modes], dim=1)
        traj = traj + ctrs[:, None, None]
        scores = self.scorer(x, ctrs, traj[:, :, -1])
        return traj, scores


def decode(decoder: TrajectoryDecoder, x: Tensor, ctrs: Tensor) -> list[Forecast]:
    with torch.no_grad():
        traj, scores = decoder(x, ctrs)
    return [Forecast(t.numpy(), s.numpy()) for t, s in zip(traj, scores)]


def select_positive_mode(trajectories: Tensor, gt_endpoint: Tensor) -> Tensor:
    return nearest_index(trajectories[:, :, -1], gt_endpoint)


def loss_traj_cls(scores: Tensor, positive: Tensor, margin: float = MARGIN) -> Tensor:
    return max_margin(scores, positive, margin)


def loss_traj_reg(trajectories: Tensor, positive: Tensor, gt: Tensor, gt_valid: Tensor | None = None) -> Tensor:
    """Smooth L1 over every valid step of the positive mode, averaged over valid (actor, step) pairs."""
    if trajectories.shape[0] == 0:
        return trajectories.sum() * 0.0
    pos = trajectories[torch.arange(trajectories.shape[0]), positive]
    per_step = reg(pos - gt)
    if gt_valid is None:
        return per_step.mean()
    w = gt_valid.to(per_step.dtype)
    return (per_step * w).sum() / w.sum().clamp(min=1.0)


def loss_traj_end(trajectories: Tensor, positive: Tensor, gt_endpoint: Tensor) -> Tensor:
    if trajectories.shape[0] == 0:
        return trajectories.sum() * 0.0
    end = trajectories[torch.arange(trajectories.shape[0]), positive, -1]
    return reg(end - gt_endpoint).mean()


def loss_stage2(cls=0.0, reg_=0.0, end=0.0, alpha=ALPHA2, beta=BETA2, rho=RHO2):
    return alpha * cls + beta * reg_ + rho * end


def total_loss(stage1, stage2):
    return stage1 + stage2

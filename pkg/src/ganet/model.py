"""Full forecaster: backbone -> (mid goal crop) -> goal crop + future interaction -> decoder."""
from __future__ import annotations

import torch
from torch import Tensor, nn

from .backbone import make_backbone
from .config import LossConfig, ModelConfig
from .data import Batch
from .decoder import (
    Forecast,
    TrajectoryDecoder,
    loss_stage2,
    loss_traj_cls,
    loss_traj_end,
    loss_traj_reg,
    select_positive_mode,
    total_loss,
)
from .goal_head import (
    GoalHead,
    MidGoalHead,
    anchor_index,
    loss_goal_cls,
    loss_goal_reg,
    loss_mid_reg,
    loss_stage1,
    mid_step,
    select_positive_goal,
)
from .goicrop import GoICrop, apply_future_interaction, apply_goal_area_crop


class MotionForecaster(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.backbone.d_hidden
        self.backbone = make_backbone(cfg.backbone)
        self.mid_head = self.mid_crop = None
        self.goal_head = self.goal_crop = self.interaction = None
        if cfg.num_goals > 0:
            if cfg.use_mid_goal:
                self.mid_head = MidGoalHead(d)
                self.mid_crop = GoICrop(d)
            self.goal_head = GoalHead(d, cfg.num_goals)
            self.goal_crop = GoICrop(d)
            if cfg.future_interaction:
                self.interaction = GoICrop(d)
        self.decoder = TrajectoryDecoder(d, cfg.num_modes, cfg.pred_len)

    def forward(self, batch: Batch) -> dict[str, Tensor]:
        cfg = self.cfg
        x, y = self.backbone(batch)
        ctrs = batch.actor_ctrs
        out: dict[str, Tensor] = {}
        crop_args = dict(y=y, lane_positions=batch.node_ctrs, node_batch=batch.node_batch,
                         radius=cfg.goal_area_radius, residual=cfg.crop_residual)
        if self.mid_head is not None:
            mid = self.mid_head(x, ctrs)
            x = apply_goal_area_crop(x, mid, batch.actor_batch, crop=self.mid_crop, **crop_args)
            out["mid_goal"] = mid
        if self.goal_head is not None:
            goals, conf = self.goal_head(x, ctrs)
            idx = anchor_index(conf)
            anchors = goals[torch.arange(goals.shape[0]), idx]
            x = apply_goal_area_crop(x, anchors, batch.actor_batch, crop=self.goal_crop, **crop_args)
            if self.interaction is not None:
                x = apply_future_interaction(x, anchors, batch.actor_batch, self.interaction,
                                             cfg.interaction_radius, cfg.crop_residual)
            out.update(goals=goals, goal_scores=conf, anchors=anchors)
        traj, scores = self.decoder(x, ctrs)
        out.update(trajectories=traj, scores=scores)
        return out

    def agent_forecasts(self, batch: Batch) -> list[Forecast]:
        with torch.no_grad():
            out = self(batch)
        rows = batch.agent_index
        return [Forecast(t.double().numpy(), s.double().numpy())
                for t, s in zip(out["trajectories"][rows], out["scores"][rows])]


def compute_loss(out: dict[str, Tensor], batch: Batch, cfg: ModelConfig, w: LossConfig) -> dict[str, Tensor]:
    """Stage-1 + stage-2 losses over every actor with a valid final future step."""
    has = batch.gt_valid[:, -1] if batch.gt.shape[1] else torch.zeros(len(batch.gt), dtype=torch.bool)
    gt, gt_valid = batch.gt[has], batch.gt_valid[has]
    gt_end = gt[:, -1]
    zero = out["trajectories"].sum() * 0.0
    parts = dict(cls_end=zero, reg_end=zero, reg_mid=zero)
    if "goals" in out:
        goals, conf = out["goals"][has], out["goal_scores"][has]
        e_hat = select_positive_goal(goals, gt_end)
        if cfg.num_goals > 1:
            parts["cls_end"] = loss_goal_cls(conf, e_hat, w.margin)
        parts["reg_end"] = loss_goal_reg(goals, e_hat, gt_end)
    if "mid_goal" in out:
        m = mid_step(gt.shape[1])
        ok = gt_valid[:, m]
        parts["reg_mid"] = loss_mid_reg(out["mid_goal"][has][ok], gt[ok, m])
    traj, scores = out["trajectories"][has], out["scores"][has]
    k_hat = select_positive_mode(traj, gt_end)
    parts["cls"] = loss_traj_cls(scores, k_hat, w.margin) if cfg.num_modes > 1 else zero
    parts["reg"] = loss_traj_reg(traj, k_hat, gt, gt_valid)
    parts["end"] = loss_traj_end(traj, k_hat, gt_end)
    parts["stage1"] = loss_stage1(parts["cls_end"], parts["reg_end"], parts["reg_mid"], w.alpha1, w.beta1, w.rho1)
    parts["stage2"] = loss_stage2(parts["cls"], parts["reg"], parts["end"], w.alpha2, w.beta2, w.rho2)
    parts["total"] = total_loss(parts["stage1"], parts["stage2"])
    return parts

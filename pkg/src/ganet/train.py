"""Training loop, evaluation runner and checkpoints."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .config import ExperimentConfig
from .data import ScenarioTensors, collate, tensorize
from .metrics import MetricReport, evaluate_forecasts
from .model import MotionForecaster, compute_loss
from .scene import Scenario, build_dilated_adjacency, normalize_scenario
from .synth import Manifest, load_scenario

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    pass


class HorizonMismatch(ValueError):
    pass


@dataclass
class Checkpoint:
    config: dict
    model_state: dict
    optimizer_state: dict | None = None
    step: int = 0
    loss_curve: list[float] = field(default_factory=list)
    config_hash: str = ""
    version: int = CHECKPOINT_VERSION

    @property
    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig.from_dict(self.config)

    def build_model(self) -> MotionForecaster:
        model = MotionForecaster(self.experiment.model)
        model.load_state_dict(self.model_state)
        model.eval()
        return model

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        torch.save(self.__dict__, path)

    @classmethod
    def load(cls, path) -> "Checkpoint":
        d = torch.load(path, map_location="cpu", weights_only=False)
        if d.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {d.get('version')}")
        return cls(**d)


def prepare(scenarios: Sequence[Scenario], cfg: ExperimentConfig) -> list[ScenarioTensors]:
    """Normalize, align dilation scales with the backbone and tensorize."""
    out = []
    scales = tuple(cfg.model.backbone.scales)
    for s in scenarios:
        if len(s.actors[0].observed) != cfg.model.obs_len:
            raise HorizonMismatch(
                f"scenario {s.scenario_id}: observed length {s.obs_len} != configured {cfg.model.obs_len}")
        if s.pred_len and s.pred_len != cfg.model.pred_len:
            raise HorizonMismatch(
                f"scenario {s.scenario_id}: horizon {s.pred_len} != configured {cfg.model.pred_len}")
        n = normalize_scenario(s)
        if n.lane_graph.scales != tuple(sorted(set(scales) | {1})):
            n = Scenario(n.scenario_id, build_dilated_adjacency(n.lane_graph, scales), n.actors, n.frame)
        out.append(tensorize(n, cfg.model.pred_len))
    return out


def load_split(manifest_path, split: str | None) -> list[Scenario]:
    m = Manifest.load(manifest_path)
    paths = m.paths(split)
    if not paths:
        raise ValueError(f"{manifest_path}: no scenarios in split {split!r}")
    return [load_scenario(p) for p in paths]


def init_checkpoint(cfg: ExperimentConfig) -> Checkpoint:
    torch.manual_seed(cfg.seed)
    model = MotionForecaster(cfg.model)
    return Checkpoint(cfg.to_dict(), model.state_dict(), None, 0, [], cfg.hash())


def batch_indices(n: int, batch_size: int, step: int, seed: int) -> np.ndarray:
    """Scenario indices of a step; one seeded permutation per epoch, so order depends on step only."""
    per_epoch = math.ceil(n / batch_size)
    epoch, j = divmod(step, per_epoch)
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    return perm[j * batch_size:(j + 1) * batch_size]


def _optimizer(model, cfg: ExperimentConfig) -> torch.optim.Adam:
    return torch.optim.Adam(model.parameters(), lr=cfg.optim.lr, foreach=True)


def train(
    cfg: ExperimentConfig,
    data: Sequence[ScenarioTensors] | None = None,
    resume: Checkpoint | None = None,
    log_every: int = 100,
    until: int | None = None,
) -> Checkpoint:
    """Adam on the summed goal- and trajectory-stage losses.

    The learning rate drops from ``optim.lr`` to ``optim.lr_decayed`` after
    ``decay_fraction`` of the step budget. ``resume`` continues a checkpoint
    of the same config up to ``optim.steps``; ``until`` stops early without
    changing the schedule, so a later resume matches an uninterrupted run.
    """
    ckpt = resume if resume is not None else init_checkpoint(cfg)
    if resume is not None and resume.config_hash != cfg.hash():
        raise ValueError("checkpoint was produced by a different config")
    end = cfg.optim.steps if until is None else min(until, cfg.optim.steps)
    if ckpt.step >= end:
        return ckpt
    if data is None:
        if cfg.manifest is None:
            raise ValueError("no training data: set a manifest")
        data = prepare(load_split(cfg.manifest, "train"), cfg)
    if not data:
        raise ValueError("empty training set")

    torch.manual_seed(cfg.seed)
    model = MotionForecaster(cfg.model)
    model.load_state_dict(ckpt.model_state)
    model.train()
    opt = _optimizer(model, cfg)
    if ckpt.optimizer_state is not None:
        opt.load_state_dict(ckpt.optimizer_state)
    curve = list(ckpt.loss_curve)
    step = ckpt.step
    bs = min(cfg.optim.batch_size, len(data))
    while step < end:
        idx = batch_indices(len(data), bs, step, cfg.seed)
        batch = collate([data[i] for i in idx])
        for g in opt.param_groups:
            g["lr"] = cfg.optim.lr_at(step)
        out = model(batch)
        parts = compute_loss(out, batch, cfg.model, cfg.loss)
        loss = parts["total"]
        if not torch.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at step {step}; scenarios: {', '.join(batch.scenario_ids)}")
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        curve.append(float(loss.detach()))
        step += 1
        if log_every and step % log_every == 0:
            log.info("step %d loss %.4f (reg %.3f end %.3f)", step, curve[-1],
                     parts["reg"].item(), parts["end"].item())
    return Checkpoint(cfg.to_dict(), model.state_dict(), opt.state_dict(), step, curve, cfg.hash())


def predict(model: MotionForecaster, data: Sequence[ScenarioTensors], batch_size: int = 32):
    model.eval()
    out = []
    for lo in range(0, len(data), batch_size):
        out.extend(model.agent_forecasts(collate(list(data[lo:lo + batch_size]))))
    return out


def evaluate(
    ckpt: Checkpoint,
    data: Sequence[ScenarioTensors] | None = None,
    split: str = "val",
    ks: Sequence[int] | None = None,
) -> MetricReport:
    cfg = ckpt.experiment
    if data is None:
        if cfg.manifest is None:
            raise ValueError("no evaluation data: set a manifest")
        data = prepare(load_split(cfg.manifest, split), cfg)
    for d in data:
        if d.gt.shape[1] != cfg.model.pred_len:
            raise HorizonMismatch(f"scenario {d.scenario_id}: horizon {d.gt.shape[1]} != {cfg.model.pred_len}")
    model = ckpt.build_model()
    forecasts = predict(model, data)
    ks = tuple(ks or cfg.eval_ks)
    gts = [d.gt[d.agent_index] for d in data]
    return evaluate_forecasts([d.scenario_id for d in data],
                              [(f.trajectories, f.scores) for f in forecasts], gts, ks)

"""Experiment configuration: dataclasses with JSON round-tripping and variant presets."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .backbone import BackboneConfig

MODEL_VARIANTS = (
    "baseline-lite", "lanegcn++-lite", "ganet_1", "ganet_2", "ganet_3", "ganet_m_3", "ganet_6", "ganet_9",
)


@dataclass
class ModelConfig:
    variant: str = "ganet_m_3"
    backbone: BackboneConfig = field(default_factory=lambda: BackboneConfig("lanegcn++-lite"))
    num_goals: int = 3  # E; 0 disables goal prediction and goal-area crops
    use_mid_goal: bool = True
    num_modes: int = 6  # K
    obs_len: int = 20
    pred_len: int = 30
    goal_area_radius: float = 6.0
    interaction_radius: float = 100.0
    future_interaction: bool = True
    crop_residual: bool = True

    def __post_init__(self):
        if isinstance(self.backbone, dict):
            self.backbone = BackboneConfig(**self.backbone)
        if self.num_modes < 1:
            raise ValueError("num_modes must be >= 1")
        if self.num_goals < 0:
            raise ValueError("num_goals must be >= 0")
        if self.goal_area_radius <= 0 or self.interaction_radius <= 0:
            raise ValueError("radii must be > 0")


@dataclass
class LossConfig:
    margin: float = 0.2
    alpha1: float = 1.0
    beta1: float = 0.2
    rho1: float = 0.1
    alpha2: float = 2.0
    beta2: float = 1.0
    rho2: float = 1.0


@dataclass
class OptimConfig:
    steps: int = 2000
    batch_size: int = 16
    lr: float = 1e-3
    lr_decayed: float = 1e-4
    decay_fraction: float = 0.75

    def lr_at(self, step: int) -> float:
        return self.lr if step < int(self.decay_fraction * self.steps) else self.lr_decayed


@dataclass
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    manifest: str | None = None
    seed: int = 0
    eval_ks: tuple[int, ...] = (1, 6)

    def __post_init__(self):
        if isinstance(self.model, dict):
            self.model = ModelConfig(**self.model)
        if isinstance(self.loss, dict):
            self.loss = LossConfig(**self.loss)
        if isinstance(self.optim, dict):
            self.optim = OptimConfig(**self.optim)
        self.eval_ks = tuple(int(k) for k in self.eval_ks)

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _check_keys(cls, d, "")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    def hash(self) -> str:
        """Digest of everything that changes the trained parameters (step budget excluded)."""
        d = self.to_dict()
        d["optim"].pop("steps")
        d.pop("manifest")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def for_variant(cls, variant: str, **overrides) -> "ExperimentConfig":
        cfg = cls(model=variant_model(variant))
        return apply_overrides(cfg, overrides) if overrides else cfg


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


_NESTED = {"model": ModelConfig, "loss": LossConfig, "optim": OptimConfig, "backbone": BackboneConfig}


def _check_keys(cls, d: dict, where: str) -> None:
    names = {f.name for f in fields(cls)}
    for k, v in d.items():
        if k not in names:
            raise ValueError(f"unknown config key {where}{k!r}")
        if isinstance(v, dict) and k in _NESTED:
            _check_keys(_NESTED[k], v, f"{where}{k}.")


def variant_model(variant: str, backbone: str | None = None, **kw) -> ModelConfig:
    """Model preset for a named ablation variant.

    baseline-lite / lanegcn++-lite have no goal stage. ganet_E predicts E
    endpoint goals; ganet_m_3 adds the middle-goal stage.
    """
    if variant not in MODEL_VARIANTS:
        raise ValueError(f"unknown model variant {variant!r}; choose from {', '.join(MODEL_VARIANTS)}")
    if variant == "baseline-lite":
        bb, e, mid = "lanegcn-lite", 0, False
    elif variant == "lanegcn++-lite":
        bb, e, mid = "lanegcn++-lite", 0, False
    elif variant == "ganet_m_3":
        bb, e, mid = "lanegcn++-lite", 3, True
    else:
        bb, e, mid = "lanegcn++-lite", int(variant.split("_")[1]), False
    bcfg = kw.pop("backbone_config", None) or BackboneConfig(backbone or bb)
    return ModelConfig(variant=variant, backbone=bcfg, num_goals=e, use_mid_goal=mid, **kw)


def _coerce(old, text: str):
    if isinstance(old, bool):
        if text.lower() in ("1", "true", "yes"):
            return True
        if text.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if isinstance(old, int):
        return int(text)
    if isinstance(old, float):
        return float(text)
    if isinstance(old, tuple):
        return tuple(int(x) for x in text.split(","))
    return text


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Set dotted keys, e.g. ``{"optim.steps": 10, "model.backbone.d_hidden": 32}``.

    String values are coerced to the type of the current value.
    """
    d = cfg.to_dict()
    for key, value in overrides.items():
        node = d
        obj = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            if p not in node:
                raise ValueError(f"unknown config key {key!r}")
            node = node[p]
            obj = getattr(obj, p)
        last = parts[-1]
        if last not in node:
            raise ValueError(f"unknown config key {key!r}")
        old = getattr(obj, last)
        if isinstance(value, str) and not isinstance(old, str) and old is not None:
            value = _coerce(old, value)
        node[last] = list(value) if isinstance(value, tuple) else value
    return ExperimentConfig.from_dict(d)


def paper_constants(cfg: ExperimentConfig) -> dict:
    """The published constants as they appear in a serialized config."""
    d = cfg.to_dict()
    return {
        "margin": d["loss"]["margin"],
        "alpha1": d["loss"]["alpha1"],
        "beta1": d["loss"]["beta1"],
        "rho1": d["loss"]["rho1"],
        "alpha2": d["loss"]["alpha2"],
        "beta2": d["loss"]["beta2"],
        "rho2": d["loss"]["rho2"],
        "goal_area_radius": d["model"]["goal_area_radius"],
        "interaction_radius": d["model"]["interaction_radius"],
        "lr": d["optim"]["lr"],
        "lr_decayed": d["optim"]["lr_decayed"],
    }

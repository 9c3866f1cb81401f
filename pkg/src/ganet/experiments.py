"""Reusable experiment protocols: the small overfit run and the variant ablation."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

from .config import ExperimentConfig, apply_overrides
from .metrics import MetricReport
from .synth import sample_scenario
from .train import Checkpoint, evaluate, prepare, train

log = logging.getLogger(__name__)

ALL_KINDS = ("straight", "arc", "merge", "T-intersection", "crossroads")
CURVED_KINDS = ("arc", "T-intersection", "crossroads")


def synthetic_set(kinds: Sequence[str], count: int, seed: int, prefix: str = "s"):
    """``count`` scenarios cycling through ``kinds``; scenario i uses seed ``seed + i``."""
    return [sample_scenario(kinds[i % len(kinds)], seed + i, f"{prefix}{i:05d}") for i in range(count)]


@dataclass
class OverfitResult:
    report: MetricReport
    checkpoint: Checkpoint
    seconds: float

    @property
    def loss_curve(self) -> list[float]:
        return self.checkpoint.loss_curve


def overfit(steps: int = 1000, n_scenarios: int = 32, seed: int = 0, variant: str = "ganet_m_3",
            data_seed: int = 1000, **overrides) -> OverfitResult:
    """Train on a small fixed set and evaluate on that same set."""
    scen = synthetic_set(ALL_KINDS, n_scenarios, data_seed, "overfit")
    cfg = ExperimentConfig.for_variant(variant, **{"optim.steps": steps, "seed": seed, **overrides})
    data = prepare(scen, cfg)
    t0 = time.perf_counter()
    ckpt = train(cfg, data)
    rep = evaluate(ckpt, data)
    return OverfitResult(rep, ckpt, time.perf_counter() - t0)


@dataclass
class AblationResult:
    variants: list[str]
    seeds: list[int]
    reports: dict[tuple[str, int], MetricReport] = field(default_factory=dict)

    def metric(self, variant: str, seed: int, name: str = "minFDE", k: int = 6) -> float:
        return self.reports[(variant, seed)].get(name, k)

    def mean_reports(self) -> dict[str, MetricReport]:
        """Seed-averaged aggregate metrics per variant (row order = variant order)."""
        out = {}
        for v in self.variants:
            reps = [self.reports[(v, s)] for s in self.seeds]
            keys = reps[0].aggregate.keys()
            agg = {k: sum(r.aggregate[k] for r in reps) / len(reps) for k in keys}
            out[v] = MetricReport(reps[0].ks, agg)
        return out


def ablate(
    variants: Sequence[str],
    train_data,
    eval_data,
    steps: int,
    seeds: Sequence[int] = (0, 1, 2),
    base: ExperimentConfig | None = None,
    overrides: dict | None = None,
) -> AblationResult:
    """Train every variant under every seed on the same data; evaluate on the held-out set.

    ``train_data`` / ``eval_data`` are lists of raw scenarios.
    """
    res = AblationResult(list(variants), list(seeds))
    for v in variants:
        cfg0 = ExperimentConfig.for_variant(v)
        if base is not None:
            cfg0.loss, cfg0.optim, cfg0.eval_ks = base.loss, base.optim, base.eval_ks
        cfg0 = apply_overrides(cfg0, {"optim.steps": steps, **(overrides or {})})
        tr, ev = prepare(train_data, cfg0), prepare(eval_data, cfg0)
        for s in seeds:
            cfg = apply_overrides(cfg0, {"seed": s})
            t0 = time.perf_counter()
            ckpt = train(cfg, tr, log_every=0)
            rep = evaluate(ckpt, ev)
            res.reports[(v, s)] = rep
            log.info("%s seed %d: minFDE6 %.3f (%.0fs)", v, s, rep.get("minFDE", 6), time.perf_counter() - t0)
    return res

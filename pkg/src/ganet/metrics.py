"""Displacement metrics over K-mode forecasts: minADE, minFDE, miss rate, brier-minFDE."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

MISS_THRESHOLD = 2.0


def top_k(trajectories: np.ndarray, scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` highest-scoring modes, best first (stable on ties)."""
    trajectories = np.asarray(trajectories, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if k < 1 or k > len(scores):
        raise ValueError(f"K={k} but forecast has {len(scores)} modes")
    order = np.argsort(-scores, kind="stable")[:k]
    return trajectories[order], scores[order]


def _endpoint_errors(traj: np.ndarray, gt: np.ndarray) -> np.ndarray:
    return np.hypot(*(traj[:, -1] - gt[-1]).T)


def min_fde(trajectories, scores, gt, k: int) -> float:
    traj, _ = top_k(trajectories, scores, k)
    return float(_endpoint_errors(traj, np.asarray(gt, dtype=np.float64)).min())


def min_ade(trajectories, scores, gt, k: int) -> float:
    """Best mode chosen by its own average displacement."""
    traj, _ = top_k(trajectories, scores, k)
    err = np.linalg.norm(traj - np.asarray(gt, dtype=np.float64)[None], axis=-1).mean(axis=1)
    return float(err.min())


def softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


def brier_min_fde(trajectories, scores, gt, k: int) -> float:
    """minFDE plus (1 - p)^2, p the softmax probability (over the K modes) of the minFDE mode."""
    traj, sc = top_k(trajectories, scores, k)
    fde = _endpoint_errors(traj, np.asarray(gt, dtype=np.float64))
    best = int(np.argmin(fde))
    p = softmax(sc)[best]
    return float(fde[best] + (1.0 - p) ** 2)


def is_miss(trajectories, scores, gt, k: int, threshold: float = MISS_THRESHOLD) -> bool:
    traj, _ = top_k(trajectories, scores, k)
    return bool(_endpoint_errors(traj, np.asarray(gt, dtype=np.float64)).min() > threshold)


def miss_rate(forecasts, gts, k: int, threshold: float = MISS_THRESHOLD) -> float:
    """Fraction of cases whose every top-K endpoint is farther than ``threshold``.

    forecasts: sequence of (trajectories, scores) pairs.
    """
    forecasts = list(forecasts)
    if not forecasts:
        raise ValueError("empty evaluation set")
    misses = [is_miss(t, s, g, k, threshold) for (t, s), g in zip(forecasts, gts)]
    return float(np.mean(misses))


METRIC_NAMES = ("minADE", "minFDE", "MR", "brier_minFDE")


@dataclass
class MetricReport:
    ks: tuple[int, ...]
    aggregate: dict[str, float]
    per_scenario: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"ks": list(self.ks), "aggregate": self.aggregate, "per_scenario": self.per_scenario}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        d = json.loads(text)
        return cls(tuple(d["ks"]), d["aggregate"], d.get("per_scenario", {}))

    def get(self, name: str, k: int) -> float:
        return self.aggregate[f"{name}_{k}"]


def evaluate_forecasts(ids, forecasts, gts, ks=(1, 6)) -> MetricReport:
    """Per-scenario and mean metrics for every K in ``ks``."""
    ids = list(ids)
    if not ids:
        raise ValueError("empty evaluation set")
    per: dict[str, dict[str, float]] = {}
    for sid, (traj, sc), gt in zip(ids, forecasts, gts):
        row = {}
        for k in ks:
            row[f"minADE_{k}"] = min_ade(traj, sc, gt, k)
            row[f"minFDE_{k}"] = min_fde(traj, sc, gt, k)
            row[f"MR_{k}"] = float(is_miss(traj, sc, gt, k))
            row[f"brier_minFDE_{k}"] = brier_min_fde(traj, sc, gt, k)
        per[sid] = row
    keys = list(next(iter(per.values())))
    agg = {key: float(np.mean([per[s][key] for s in ids])) for key in keys}
    return MetricReport(tuple(ks), agg, per)


TABLE_COLUMNS = [("minFDE", 6), ("minADE", 6), ("minFDE", 1), ("minADE", 1), ("MR", 6), ("brier_minFDE", 6)]


def format_table(rows: dict[str, MetricReport], columns=TABLE_COLUMNS) -> str:
    """Aligned text table, one row per method; columns missing from a report print as '-'."""
    head = ["Method"] + [f"{n} (K={k})" for n, k in columns]
    body = []
    for name, rep in rows.items():
        cells = [name]
        for n, k in columns:
            key = f"{n}_{k}"
            cells.append(f"{rep.aggregate[key]:.3f}" if key in rep.aggregate else "-")
        body.append(cells)
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = ["  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in [head] + body]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)

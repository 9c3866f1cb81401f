import numpy as np
import pytest
import torch

from ganet.scene import ActorTrack, Lane, LaneGraph, Scenario, TrackPoint


def make_track(actor_id, observed, future=(), is_agent=False, valid=None):
    """ActorTrack from raw (x, y) rows; ``valid`` masks observed rows."""
    n = len(observed)
    valid = [True] * n if valid is None else list(valid)
    obs = tuple(TrackPoint((float(x), float(y)), i - n + 1, v) for i, ((x, y), v) in enumerate(zip(observed, valid)))
    fut = tuple(TrackPoint((float(x), float(y)), i + 1) for i, (x, y) in enumerate(future))
    return ActorTrack(actor_id, obs, fut, is_agent)


def straight_lane(lane_id="L", start=(0.0, 0.0), length=20.0, seg=2.0, heading=0.0, **kw):
    n = int(round(length / seg))
    d = np.array([np.cos(heading), np.sin(heading)])
    pts = tuple((float(p[0]), float(p[1])) for p in np.asarray(start) + np.outer(np.arange(n + 1) * seg, d))
    return Lane(lane_id, pts, **kw)


def line_track(actor_id, start, velocity, obs_len=20, pred_len=30, is_agent=False, dt=0.1):
    """Constant-velocity track with step 0 at ``start``."""
    v = np.asarray(velocity, dtype=float) * dt
    obs = [np.asarray(start) + v * k for k in range(-obs_len + 1, 1)]
    fut = [np.asarray(start) + v * k for k in range(1, pred_len + 1)]
    return make_track(actor_id, obs, fut, is_agent)


def simple_scenario(obs_len=20, pred_len=30, sid="simple"):
    lanes = [straight_lane("L0", (-40.0, 0.0), 80.0), straight_lane("L1", (-40.0, 3.5), 80.0)]
    g = LaneGraph.from_lanes(lanes)
    actors = (line_track("a0", (0.0, 0.0), (10.0, 0.0), obs_len, pred_len, is_agent=True),
              line_track("a1", (-10.0, 3.5), (8.0, 0.0), obs_len, pred_len))
    return Scenario(sid, g, actors)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _torch_seed():
    torch.manual_seed(0)


def batch_of(scenarios, dtype=torch.float64, pred_len=None):
    """Normalize, tensorize and collate scenarios."""
    from ganet.data import collate, tensorize
    from ganet.scene import normalize_scenario

    return collate([tensorize(normalize_scenario(s), pred_len) for s in scenarios], dtype=dtype)


def tiny_backbone_cfg(variant, **kw):
    from ganet.backbone import BackboneConfig

    base = dict(d_hidden=8, num_heads=2, temporal_depth=2, map_depth=1)
    base.update(kw)
    return BackboneConfig(variant, **base)

"""Procedural lane maps, lane-following tracks and the JSON scenario format."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .scene import (
    DEFAULT_SCALES,
    ActorTrack,
    Lane,
    LaneGraph,
    NormalizationTransform,
    Scenario,
    TrackPoint,
)

MAP_KINDS = ("straight", "arc", "merge", "T-intersection", "crossroads")
MANEUVER_KINDS = ("keep-lane", "stop", "turn-left", "turn-right", "lane-change")
FORMAT_VERSION = 1
DT = 0.1
TURN_THRESHOLD = math.radians(45.0)
SEGMENT_TOLERANCE = 0.1


class InfeasibleManeuver(ValueError):
    pass


class ScenarioFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MapTemplateSpec:
    kind: str = "straight"
    length: float = 100.0
    arc_radius: float = 30.0
    arc_angle_deg: float = 90.0
    lane_spacing: float = 3.5
    n_lanes: int = 1
    junction_radius: float = 10.0
    segment_length: float = 2.0
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.segment_length <= 0:
            raise ValueError("segment_length must be > 0")
        if self.arc_radius <= self.lane_spacing * max(1, self.n_lanes - 1):
            raise ValueError(
                f"arc_radius {self.arc_radius} must exceed lane spacing {self.lane_spacing}"
            )
        if self.n_lanes < 1 or self.length <= 0:
            raise ValueError("need n_lanes >= 1 and length > 0")


@dataclass(frozen=True)
class ManeuverSpec:
    kind: str = "keep-lane"
    speed: float = 10.0
    accel: float = 0.0
    noise: float = 0.1
    max_speed: float = 25.0

    def __post_init__(self):
        if self.kind not in MANEUVER_KINDS:
            raise ValueError(f"unknown maneuver {self.kind!r}")
        if self.speed < 0 or self.max_speed < 0:
            raise ValueError("speeds must be >= 0")
        if self.noise < 0:
            raise ValueError("noise scale must be >= 0")


# ---------------------------------------------------------------- geometry

def _straight(start, heading, length, step=0.05) -> np.ndarray:
    n = max(2, int(math.ceil(length / step)) + 1)
    s = np.linspace(0.0, length, n)
    return np.asarray(start) + s[:, None] * np.array([math.cos(heading), math.sin(heading)])


def _arc(start, heading, radius, angle, step=0.05) -> np.ndarray:
    """Circular arc; positive ``angle`` turns left."""
    sign = 1.0 if angle >= 0 else -1.0
    normal = np.array([-math.sin(heading), math.cos(heading)]) * sign
    center = np.asarray(start) + radius * normal
    n = max(2, int(math.ceil(abs(angle) * radius / step)) + 1)
    phi0 = math.atan2(start[1] - center[1], start[0] - center[0])
    phi = phi0 + sign * np.linspace(0.0, abs(angle), n)
    return center + radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)


def _bezier(p0, h0, p1, h1, n=400) -> np.ndarray:
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    c = 0.5 * float(np.hypot(*(p1 - p0)))
    c0 = p0 + c * np.array([math.cos(h0), math.sin(h0)])
    c1 = p1 - c * np.array([math.cos(h1), math.sin(h1)])
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1 - t) ** 3 * p0 + 3 * (1 - t) ** 2 * t * c0 + 3 * (1 - t) * t ** 2 * c1 + t ** 3 * p1


def _join(*parts: np.ndarray) -> np.ndarray:
    out = [parts[0]]
    for p in parts[1:]:
        out.append(p[1:])
    return np.concatenate(out)


def _heading_at_end(pts: np.ndarray) -> float:
    d = pts[-1] - pts[-2]
    return math.atan2(d[1], d[0])


def _arclength(pts: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])


def _left_normals(pts: np.ndarray) -> np.ndarray:
    t = np.gradient(pts, axis=0)
    t /= np.hypot(*t.T)[:, None]
    return np.stack([-t[:, 1], t[:, 0]], axis=1)


def offset_polyline(pts: np.ndarray, d: float) -> np.ndarray:
    """Shift a dense polyline by ``d`` meters to its left."""
    return pts + d * _left_normals(pts)


def resample_polyline(pts: np.ndarray, seg: float) -> np.ndarray:
    """Resample to equal arc-length spacing whose chords come as close to ``seg`` as the length allows."""
    s = _arclength(pts)

    def at(n):
        q = np.linspace(0.0, s[-1], n + 1)
        return np.stack([np.interp(q, s, pts[:, 0]), np.interp(q, s, pts[:, 1])], axis=1)

    # chords on curves are shorter than the arc, so one fewer segment can fit better
    n0 = max(1, int(round(s[-1] / seg)))
    best = min(range(max(1, n0 - 1), n0 + 2),
               key=lambda n: (np.abs(np.hypot(*np.diff(at(n), axis=0).T) - seg).max(), n))
    return at(best)


def _lane(lane_id, dense, seg, **kw) -> Lane:
    pts = resample_polyline(dense, seg)
    return Lane(lane_id, tuple((float(x), float(y)) for x, y in pts), **kw)


def _parallel_lanes(dense: np.ndarray, spec: MapTemplateSpec, prefix: str) -> list[Lane]:
    lanes = []
    for k in range(spec.n_lanes):
        left = f"{prefix}{k + 1}" if k + 1 < spec.n_lanes else None
        right = f"{prefix}{k - 1}" if k > 0 else None
        lanes.append(
            _lane(f"{prefix}{k}", offset_polyline(dense, k * spec.lane_spacing), spec.segment_length,
                  left=left, right=right)
        )
    return lanes


def _junction(spec: MapTemplateSpec, leg_angles: Sequence[float]) -> list[Lane]:
    w = spec.junction_radius
    leg = spec.length / 2.0
    off = spec.lane_spacing / 2.0
    lanes: list[Lane] = []
    ends: dict[int, tuple[np.ndarray, float]] = {}
    starts: dict[int, tuple[np.ndarray, float]] = {}
    for a, phi in enumerate(leg_angles):
        u = np.array([math.cos(phi), math.sin(phi)])
        h_in = phi + math.pi
        rn_in = np.array([math.sin(h_in), -math.cos(h_in)])
        rn_out = np.array([u[1], -u[0]])
        p_in = u * (w + leg) + off * rn_in
        dense_in = _straight(p_in, h_in, leg)
        ends[a] = (dense_in[-1], h_in)
        p_out = u * w + off * rn_out
        starts[a] = (p_out, phi)
        dense_out = _straight(p_out, phi, leg)
        succ = tuple(f"c{a}_{b}" for b in range(len(leg_angles)) if b != a)
        lanes.append(_lane(f"in{a}", dense_in, spec.segment_length, suc=succ))
        lanes.append(_lane(f"out{a}", dense_out, spec.segment_length))
    for a in range(len(leg_angles)):
        for b in range(len(leg_angles)):
            if a == b:
                continue
            (p0, h0), (p1, h1) = ends[a], starts[b]
            lanes.append(_lane(f"c{a}_{b}", _bezier(p0, h0, p1, h1), spec.segment_length, suc=(f"out{b}",)))
    return lanes


def _template_lanes(spec: MapTemplateSpec) -> list[Lane]:
    L = spec.length
    if spec.kind == "straight":
        return _parallel_lanes(_straight((0.0, 0.0), 0.0, L), spec, "L")
    if spec.kind == "arc":
        lead = L / 2.0
        a = _straight((0.0, 0.0), 0.0, lead)
        b = _arc(a[-1], 0.0, spec.arc_radius, math.radians(spec.arc_angle_deg))
        c = _straight(b[-1], _heading_at_end(b), lead)
        return _parallel_lanes(_join(a, b, c), spec, "L")
    if spec.kind == "merge":
        half = L / 2.0
        up = _straight((-half, 0.0), 0.0, half)
        down = _straight((0.0, 0.0), 0.0, half)
        ramp = _bezier((-half, -3.0 * spec.lane_spacing), 0.0, (0.0, 0.0), 0.0)
        return [
            _lane("main_up", up, spec.segment_length, suc=("main_down",)),
            _lane("main_down", down, spec.segment_length),
            _lane("ramp", ramp, spec.segment_length, suc=("main_down",)),
        ]
    if spec.kind == "T-intersection":
        return _junction(spec, (0.0, math.pi, 1.5 * math.pi))
    return _junction(spec, (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi))


def _world_pose(seed: int | None) -> NormalizationTransform:
    if seed is None:
        return NormalizationTransform()
    rng = np.random.default_rng(seed)
    o = rng.uniform(-50.0, 50.0, size=2)
    return NormalizationTransform((float(o[0]), float(o[1])), float(rng.uniform(-math.pi, math.pi)))


def generate_map(spec: MapTemplateSpec, scales: Sequence[int] = DEFAULT_SCALES) -> LaneGraph:
    """Build the lane graph of a template, placed in the world by ``spec.seed``."""
    pose = _world_pose(spec.seed)
    lanes = []
    for ln in _template_lanes(spec):
        pts = pose.invert(np.asarray(ln.centerline))
        lanes.append(Lane(ln.lane_id, tuple((float(x), float(y)) for x, y in pts), ln.suc, ln.left, ln.right))
    graph = LaneGraph.from_lanes(lanes, scales)
    worst = max(graph.nodes, key=lambda n: abs(n.length - spec.segment_length))
    if abs(worst.length - spec.segment_length) > SEGMENT_TOLERANCE * spec.segment_length:
        raise ValueError(
            f"segment_length {spec.segment_length} m is too coarse for lane {worst.lane_id!r} of this "
            f"{spec.kind} template (best split gives {worst.length:.2f} m segments)")
    return graph


# ---------------------------------------------------------------- tracks

def _lane_heading_change(lane: Lane) -> float:
    pts = np.asarray(lane.centerline)
    d0, d1 = pts[1] - pts[0], pts[-1] - pts[-2]
    a = math.atan2(d1[1], d1[0]) - math.atan2(d0[1], d0[0])
    return (a + math.pi) % (2 * math.pi) - math.pi


def lane_turns(graph: LaneGraph) -> dict[str, str]:
    """Classify branch lanes as 'left' / 'right' turns; all others are 'straight'."""
    preds: dict[str, list[str]] = {ln.lane_id: [] for ln in graph.lanes}
    by_id = {ln.lane_id: ln for ln in graph.lanes}
    for ln in graph.lanes:
        for nxt in ln.suc:
            preds[nxt].append(ln.lane_id)
    out = {}
    for ln in graph.lanes:
        branch = any(len(by_id[p].suc) > 1 for p in preds[ln.lane_id])
        a = _lane_heading_change(ln)
        if branch and a > TURN_THRESHOLD:
            out[ln.lane_id] = "left"
        elif branch and a < -TURN_THRESHOLD:
            out[ln.lane_id] = "right"
        else:
            out[ln.lane_id] = "straight"
    return out


def enumerate_routes(graph: LaneGraph) -> list[tuple[str, ...]]:
    """All maximal successor chains starting at lanes without predecessors."""
    by_id = {ln.lane_id: ln for ln in graph.lanes}
    has_pred = {nxt for ln in graph.lanes for nxt in ln.suc}
    routes: list[tuple[str, ...]] = []

    def walk(route):
        nxt = [n for n in by_id[route[-1]].suc if n not in route]
        if not nxt:
            routes.append(tuple(route))
        for n in nxt:
            walk(route + [n])

    for ln in graph.lanes:
        if ln.lane_id not in has_pred:
            walk([ln.lane_id])
    return routes


def _feasible_routes(graph: LaneGraph, kind: str) -> list[tuple[str, ...]]:
    turns = lane_turns(graph)
    routes = enumerate_routes(graph)
    by_id = {ln.lane_id: ln for ln in graph.lanes}
    if kind in ("keep-lane", "stop"):
        ok = [r for r in routes if all(turns[l] == "straight" for l in r)]
        return ok or routes
    if kind == "turn-left":
        return [r for r in routes if any(turns[l] == "left" for l in r)]
    if kind == "turn-right":
        return [r for r in routes if any(turns[l] == "right" for l in r)]
    return [r for r in routes if by_id[r[0]].left is not None or by_id[r[0]].right is not None]


def _speed_profile(m: ManeuverSpec, t: np.ndarray, horizon: float) -> np.ndarray:
    a = m.accel
    if m.kind == "stop":
        a = min(a, -m.speed / (0.7 * horizon)) if m.speed > 0 else a
    return np.clip(m.speed + a * t, 0.0, m.max_speed)


def _travelled(m: ManeuverSpec, steps: np.ndarray, dt: float, horizon: float) -> np.ndarray:
    """Arc length at each step time relative to step 0 (trapezoid on a fine grid)."""
    sub = 50
    t_lo, t_hi = steps[0] * dt, steps[-1] * dt
    n = int(round((t_hi - t_lo) / dt)) * sub + 1
    t = np.linspace(t_lo, t_hi, n)
    v = _speed_profile(m, t, horizon)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))])
    s_steps = s[::sub]
    zero = int(np.flatnonzero(steps == 0)[0])
    return s_steps - s_steps[zero]


def _interp_path(path: np.ndarray, cum: np.ndarray, s: np.ndarray) -> np.ndarray:
    return np.stack([np.interp(s, cum, path[:, 0]), np.interp(s, cum, path[:, 1])], axis=1)


def generate_tracks(
    graph: LaneGraph,
    maneuvers: Sequence[ManeuverSpec],
    seed: int,
    obs_len: int = 20,
    pred_len: int = 30,
    dt: float = DT,
    drop_prob: float = 0.3,
) -> tuple[ActorTrack, ...]:
    """One lane-following track per maneuver; the first maneuver drives the agent."""
    if graph.num_nodes == 0:
        raise ValueError("empty lane graph")
    if not maneuvers:
        raise ValueError("need at least one maneuver")
    rng = np.random.default_rng(seed)
    by_id = {ln.lane_id: ln for ln in graph.lanes}
    turns = lane_turns(graph)
    steps = np.arange(-obs_len + 1, pred_len + 1)
    horizon = pred_len * dt
    tracks = []
    for idx, m in enumerate(maneuvers):
        routes = _feasible_routes(graph, m.kind)
        if not routes:
            raise InfeasibleManeuver(f"maneuver {m.kind!r} is not possible on this map (no matching lane route)")
        route = routes[int(rng.integers(len(routes)))]
        path = _join(*[np.asarray(by_id[l].centerline) for l in route])
        cum = _arclength(path)
        s_rel = _travelled(m, steps, dt, horizon)
        back, fwd = -s_rel[0], s_rel[-1]
        lo, hi = back, cum[-1] - fwd
        if hi < lo:
            raise InfeasibleManeuver(f"route {route} too short for maneuver {m.kind!r} at {m.speed} m/s")
        if m.kind in ("turn-left", "turn-right"):
            want = "left" if m.kind == "turn-left" else "right"
            first = next(i for i, l in enumerate(route) if turns[l] == want)
            s_turn = cum[sum(len(by_id[l].centerline) - 1 for l in route[:first])]
            lo2, hi2 = max(lo, s_turn - 0.8 * fwd), min(hi, s_turn - 0.2 * fwd)
            if hi2 >= lo2:
                lo, hi = lo2, hi2
        s0 = float(rng.uniform(lo, hi))
        pos = _interp_path(path, cum, s0 + s_rel)
        if m.kind == "lane-change":
            first = by_id[route[0]]
            side = first.left if first.left is not None else first.right
            target = np.asarray(by_id[side].centerline)
            normals = _left_normals(path)
            n_at = np.stack([np.interp(s0 + s_rel, cum, normals[:, i]) for i in range(2)], axis=1)
            offset = float(np.min(np.hypot(*(target - pos[obs_len - 1]).T)))
            sign = 1.0 if side == first.left else -1.0
            t = steps * dt
            t0 = float(rng.uniform(0.0, 0.5 * horizon))
            blend = np.clip((t - t0) / 2.5, 0.0, 1.0)
            blend = blend * blend * (3 - 2 * blend)
            pos = pos + (sign * offset * blend)[:, None] * n_at
        if m.noise > 0:
            pos = pos + rng.normal(0.0, m.noise, size=pos.shape)
        valid = np.ones(len(steps), dtype=bool)
        if idx > 0 and rng.random() < drop_prob:
            valid[: int(rng.integers(1, obs_len // 2 + 1))] = False
        pts = [
            TrackPoint((float(p[0]), float(p[1])) if v else (0.0, 0.0), int(k), bool(v))
            for p, k, v in zip(pos, steps, valid)
        ]
        tracks.append(
            ActorTrack(
                actor_id=f"a{idx}",
                observed=tuple(pts[:obs_len]),
                future=tuple(pts[obs_len:]),
                is_agent=(idx == 0),
            )
        )
    return tuple(tracks)


def make_scenario(
    map_spec: MapTemplateSpec,
    maneuvers: Sequence[ManeuverSpec],
    seed: int,
    scenario_id: str = "scenario",
    obs_len: int = 20,
    pred_len: int = 30,
) -> Scenario:
    graph = generate_map(map_spec)
    actors = generate_tracks(graph, maneuvers, seed, obs_len, pred_len)
    return Scenario(scenario_id, graph, actors)


def sample_scenario(
    kind: str,
    seed: int,
    scenario_id: str | None = None,
    obs_len: int = 20,
    pred_len: int = 30,
    n_others: tuple[int, int] = (1, 3),
) -> Scenario:
    """Random geometry + random feasible maneuvers for one template kind."""
    rng = np.random.default_rng(seed)
    geom: dict = {"seed": int(rng.integers(2**31))}
    if kind == "straight":
        geom.update(n_lanes=int(rng.integers(1, 3)), length=float(rng.uniform(90, 130)))
    elif kind == "arc":
        geom.update(
            n_lanes=int(rng.integers(1, 3)),
            length=float(rng.uniform(60, 120)),
            arc_radius=float(rng.uniform(12, 40)),
            arc_angle_deg=float(rng.choice([-1, 1]) * rng.uniform(40, 110)),
        )
    elif kind == "merge":
        geom.update(length=float(rng.uniform(100, 140)))
    else:
        geom.update(length=float(rng.uniform(100, 120)), junction_radius=float(rng.uniform(8, 12)))
    spec = MapTemplateSpec(kind=kind, **geom)
    graph = generate_map(spec)

    if kind in ("T-intersection", "crossroads"):
        agent_kinds = ["turn-left", "turn-right", "keep-lane", "stop"]
        p = [0.35, 0.35, 0.2, 0.1]
    elif spec.n_lanes > 1:
        agent_kinds, p = ["keep-lane", "lane-change", "stop"], [0.6, 0.25, 0.15]
    else:
        agent_kinds, p = ["keep-lane", "stop"], [0.85, 0.15]
    others = int(rng.integers(n_others[0], n_others[1] + 1))
    for _ in range(20):
        agent = ManeuverSpec(
            kind=str(rng.choice(agent_kinds, p=p)),
            speed=float(rng.uniform(6.0, 14.0)),
            accel=float(rng.uniform(-1.0, 1.0)),
        )
        ms = [agent] + [
            ManeuverSpec("keep-lane", speed=float(rng.uniform(3.0, 12.0)), accel=float(rng.uniform(-0.5, 0.5)))
            for _ in range(others)
        ]
        try:
            actors = generate_tracks(graph, ms, int(rng.integers(2**31)), obs_len, pred_len)
        except InfeasibleManeuver:
            continue
        return Scenario(scenario_id or f"{kind}-{seed}", graph, actors)
    raise InfeasibleManeuver(f"could not sample a feasible scenario for {kind!r} (seed {seed})")


# ---------------------------------------------------------------- JSON format

def scenario_to_dict(s: Scenario) -> dict:
    actors = []
    for a in s.actors:
        states = [
            {"step": p.step_index, "x": p.position[0], "y": p.position[1], "valid": p.valid}
            for p in a.observed + a.future
        ]
        actors.append({"actor_id": a.actor_id, "is_agent": a.is_agent, "obs_len": len(a.observed), "states": states})
    return {
        "format_version": FORMAT_VERSION,
        "scenario_id": s.scenario_id,
        "dilation_scales": list(s.lane_graph.scales),
        "frame": {"origin": list(s.frame.origin), "rotation": s.frame.rotation},
        "lanes": [
            {
                "lane_id": ln.lane_id,
                "centerline": [list(p) for p in ln.centerline],
                "suc": list(ln.suc),
                "left": ln.left,
                "right": ln.right,
            }
            for ln in s.lane_graph.lanes
        ],
        "actors": actors,
    }


def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ScenarioFormatError(f"{where}: expected an object")
    if key not in d:
        raise ScenarioFormatError(f"{where}.{key}: missing required field {key!r}")
    return d[key]


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioFormatError(f"{where}: expected a number, got {v!r}")
    return float(v)


def scenario_from_dict(d: dict) -> Scenario:
    sid = _req(d, "scenario_id", "$")
    lanes = []
    for i, ln in enumerate(_req(d, "lanes", "$")):
        w = f"$.lanes[{i}]"
        cl = _req(ln, "centerline", w)
        pts = tuple((_num(p[0], f"{w}.centerline[{k}][0]"), _num(p[1], f"{w}.centerline[{k}][1]"))
                    for k, p in enumerate(cl))
        lanes.append(
            Lane(str(_req(ln, "lane_id", w)), pts, tuple(ln.get("suc", ())), ln.get("left"), ln.get("right"))
        )
    scales = tuple(d.get("dilation_scales", DEFAULT_SCALES))
    try:
        graph = LaneGraph.from_lanes(lanes, scales)
    except ValueError as e:
        raise ScenarioFormatError(f"$.lanes: {e}") from e
    actors = []
    for i, a in enumerate(_req(d, "actors", "$")):
        w = f"$.actors[{i}]"
        is_agent = _req(a, "is_agent", w)
        if not isinstance(is_agent, bool):
            raise ScenarioFormatError(f"{w}.is_agent: expected a boolean")
        pts = []
        for k, st in enumerate(_req(a, "states", w)):
            ws = f"{w}.states[{k}]"
            valid = bool(st.get("valid", True))
            pts.append(TrackPoint((_num(_req(st, "x", ws), ws + ".x"), _num(_req(st, "y", ws), ws + ".y")),
                                  int(_req(st, "step", ws)), valid))
        n_obs = sum(p.step_index <= 0 for p in pts)
        try:
            actors.append(ActorTrack(str(_req(a, "actor_id", w)), tuple(pts[:n_obs]), tuple(pts[n_obs:]), is_agent))
        except ValueError as e:
            raise ScenarioFormatError(f"{w}: {e}") from e
    fr = d.get("frame", {"origin": [0.0, 0.0], "rotation": 0.0})
    frame = NormalizationTransform(
        (_num(fr["origin"][0], "$.frame.origin[0]"), _num(fr["origin"][1], "$.frame.origin[1]")),
        _num(fr["rotation"], "$.frame.rotation"),
    )
    try:
        return Scenario(str(sid), graph, tuple(actors), frame)
    except ValueError as e:
        raise ScenarioFormatError(f"$.actors: {e}") from e


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=1), encoding="utf-8")


def load_scenario(path) -> Scenario:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ScenarioFormatError(f"{path}: invalid JSON ({e})") from e
    try:
        return scenario_from_dict(d)
    except ScenarioFormatError as e:
        raise ScenarioFormatError(f"{path}: {e}") from e


@dataclass
class Manifest:
    """Scenario file list with split tags; paths are relative to ``root``."""

    root: Path
    entries: list[tuple[str, str]] = field(default_factory=list)

    def paths(self, split: str | None = None) -> list[Path]:
        return [self.root / p for p, sp in self.entries if split is None or sp == split]

    def save(self, path) -> None:
        path = Path(path)
        body = {"format_version": FORMAT_VERSION,
                "scenarios": [{"path": p, "split": sp} for p, sp in self.entries]}
        path.write_text(json.dumps(body, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        d = json.loads(path.read_text(encoding="utf-8"))
        entries = [(str(_req(e, "path", f"$.scenarios[{i}]")), str(_req(e, "split", f"$.scenarios[{i}]")))
                   for i, e in enumerate(_req(d, "scenarios", "$"))]
        return cls(path.parent, entries)


def generate_dataset(
    out_dir,
    kinds: Sequence[str],
    count: int,
    seed: int,
    val_fraction: float = 0.0,
    obs_len: int = 20,
    pred_len: int = 30,
) -> Manifest:
    """Write ``count`` scenario files and a ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_val = int(round(count * val_fraction))
    entries = []
    for i in range(count):
        kind = kinds[i % len(kinds)]
        s = sample_scenario(kind, int(rng.integers(2**31)), f"{kind}-{seed}-{i:05d}", obs_len, pred_len)
        name = f"scenario_{i:05d}.json"
        save_scenario(s, out / name)
        entries.append((name, "val" if i >= count - n_val else "train"))
    m = Manifest(out, entries)
    m.save(out / "manifest.json")
    return m

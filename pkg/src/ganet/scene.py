"""Scenario data model: tracks, lane graphs and the agent-centric frame."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

DEFAULT_SCALES = (1, 2, 4, 8)
HEADING_EPS = 1e-8

Point = tuple[float, float]


class DegenerateHeadingError(ValueError):
    pass


@dataclass(frozen=True)
class TrackPoint:
    position: Point
    step_index: int
    valid: bool = True

    def __post_init__(self):
        if self.valid and not all(math.isfinite(c) for c in self.position):
            raise ValueError(f"non-finite position at step {self.step_index}")


@dataclass(frozen=True)
class ActorTrack:
    actor_id: str
    observed: tuple[TrackPoint, ...]
    future: tuple[TrackPoint, ...] = ()
    is_agent: bool = False

    def __post_init__(self):
        n_obs = len(self.observed)
        if n_obs == 0:
            raise ValueError(f"actor {self.actor_id}: empty observation")
        steps = [p.step_index for p in self.observed]
        if steps != list(range(-n_obs + 1, 1)):
            raise ValueError(f"actor {self.actor_id}: observed steps must run {-n_obs + 1}..0")
        fsteps = [p.step_index for p in self.future]
        if fsteps != list(range(1, len(self.future) + 1)):
            raise ValueError(f"actor {self.actor_id}: future steps must run 1..T")
        if self.is_agent and not self.observed[-1].valid:
            raise ValueError(f"agent {self.actor_id}: step 0 must be valid")

    @property
    def current(self) -> TrackPoint:
        return self.observed[-1]

    def observed_array(self) -> tuple[np.ndarray, np.ndarray]:
        """(T', 2) positions with invalid rows zeroed, and the (T',) mask."""
        valid = np.array([p.valid for p in self.observed], dtype=bool)
        pos = np.array([p.position for p in self.observed], dtype=np.float64).reshape(-1, 2)
        pos[~valid] = 0.0
        return pos, valid

    def future_array(self) -> tuple[np.ndarray, np.ndarray]:
        valid = np.array([p.valid for p in self.future], dtype=bool)
        pos = np.array([p.position for p in self.future], dtype=np.float64).reshape(-1, 2)
        pos[~valid] = 0.0
        return pos, valid


@dataclass(frozen=True)
class LaneNode:
    node_id: int
    center: Point
    direction: Point
    lane_id: str
    length: float = 0.0

    def __post_init__(self):
        if abs(math.hypot(*self.direction) - 1.0) > 1e-6:
            raise ValueError(f"node {self.node_id}: direction is not unit length")
        if not all(math.isfinite(c) for c in self.center):
            raise ValueError(f"node {self.node_id}: non-finite center")


@dataclass(frozen=True)
class Lane:
    """Source centerline record; each consecutive point pair becomes one lane node."""

    lane_id: str
    centerline: tuple[Point, ...]
    suc: tuple[str, ...] = ()
    left: str | None = None
    right: str | None = None


Adjacency = tuple[tuple[int, ...], ...]


@dataclass(frozen=True, eq=True)
class LaneGraph:
    lanes: tuple[Lane, ...]
    nodes: tuple[LaneNode, ...]
    suc: Mapping[int, Adjacency]
    pre: Mapping[int, Adjacency]
    left: Adjacency
    right: Adjacency

    __hash__ = None  # type: ignore[assignment]

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def scales(self) -> tuple[int, ...]:
        return tuple(sorted(self.suc))

    def centers(self) -> np.ndarray:
        return np.array([n.center for n in self.nodes], dtype=np.float64).reshape(-1, 2)

    def directions(self) -> np.ndarray:
        return np.array([n.direction for n in self.nodes], dtype=np.float64).reshape(-1, 2)

    def lane_nodes(self, lane_id: str) -> list[int]:
        return [n.node_id for n in self.nodes if n.lane_id == lane_id]

    @classmethod
    def from_lanes(
        cls,
        lanes: Sequence[Lane],
        scales: Sequence[int] = DEFAULT_SCALES,
        neighbor_dist: float = 6.0,
    ) -> "LaneGraph":
        """Discretize centerlines into nodes and wire successor / neighbor relations.

        Lane-level ``suc`` links connect the last node of a lane to the first node
        of each successor. Left/right links go to the nearest node of the
        neighboring lane when it is within ``neighbor_dist`` meters.
        """
        lanes = tuple(lanes)
        ids = [ln.lane_id for ln in lanes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate lane_id")
        nodes: list[LaneNode] = []
        span: dict[str, tuple[int, int]] = {}
        for ln in lanes:
            pts = np.asarray(ln.centerline, dtype=np.float64).reshape(-1, 2)
            if len(pts) < 2:
                raise ValueError(f"lane {ln.lane_id}: centerline needs >= 2 points")
            start = len(nodes)
            for a, b in zip(pts[:-1], pts[1:]):
                d = b - a
                seg = float(np.hypot(*d))
                if seg <= 0.0:
                    raise ValueError(f"lane {ln.lane_id}: zero-length segment")
                mid = (a + b) / 2.0
                nodes.append(
                    LaneNode(
                        node_id=len(nodes),
                        center=(float(mid[0]), float(mid[1])),
                        direction=(float(d[0] / seg), float(d[1] / seg)),
                        lane_id=ln.lane_id,
                        length=seg,
                    )
                )
            span[ln.lane_id] = (start, len(nodes))

        n = len(nodes)
        suc1: list[set[int]] = [set() for _ in range(n)]
        for ln in lanes:
            lo, hi = span[ln.lane_id]
            for i in range(lo, hi - 1):
                suc1[i].add(i + 1)
            for nxt in ln.suc:
                if nxt not in span:
                    raise ValueError(f"lane {ln.lane_id}: unknown successor {nxt!r}")
                suc1[hi - 1].add(span[nxt][0])

        centers = np.array([nd.center for nd in nodes]).reshape(-1, 2)
        left: list[tuple[int, ...]] = [() for _ in range(n)]
        right: list[tuple[int, ...]] = [() for _ in range(n)]
        for ln in lanes:
            lo, hi = span[ln.lane_id]
            for side, out in ((ln.left, left), (ln.right, right)):
                if side is None:
                    continue
                if side not in span:
                    raise ValueError(f"lane {ln.lane_id}: unknown neighbor {side!r}")
                nlo, nhi = span[side]
                for i in range(lo, hi):
                    d = np.hypot(*(centers[nlo:nhi] - centers[i]).T)
                    k = int(np.argmin(d))
                    if d[k] <= neighbor_dist:
                        out[i] = (nlo + k,)

        adj1 = tuple(tuple(sorted(s)) for s in suc1)
        graph = cls(
            lanes=lanes,
            nodes=tuple(nodes),
            suc={1: adj1},
            pre={1: _transpose(adj1, n)},
            left=tuple(left),
            right=tuple(right),
        )
        return build_dilated_adjacency(graph, scales)


def _transpose(adj: Adjacency, n: int) -> Adjacency:
    out: list[list[int]] = [[] for _ in range(n)]
    for i, row in enumerate(adj):
        for j in row:
            out[j].append(i)
    return tuple(tuple(sorted(r)) for r in out)


def _to_csr(adj: Adjacency, n: int) -> sp.csr_matrix:
    rows = [i for i, r in enumerate(adj) for _ in r]
    cols = [j for r in adj for j in r]
    return sp.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n, n))


def _from_csr(m: sp.csr_matrix) -> Adjacency:
    m = m.tocsr()
    m.sort_indices()
    return tuple(tuple(int(j) for j in m.indices[m.indptr[i]:m.indptr[i + 1]]) for i in range(m.shape[0]))


def build_dilated_adjacency(graph: LaneGraph, scales: Sequence[int]) -> LaneGraph:
    """Return ``graph`` with successor/predecessor lists at every requested dilation.

    ``suc[s][i]`` is the set of nodes reachable from ``i`` by a walk of exactly
    ``s`` successor hops. Walks that revisit nodes on cyclic graphs are allowed;
    each endpoint appears once.
    """
    if 1 not in graph.suc:
        raise ValueError("dilation-1 successors required")
    n = graph.num_nodes
    base = _to_csr(graph.suc[1], n)
    if _transpose(graph.suc[1], n) != tuple(graph.pre.get(1, _transpose(graph.suc[1], n))):
        raise ValueError("pre[1] is not the transpose of suc[1]")
    suc: dict[int, Adjacency] = {1: graph.suc[1]}
    pre: dict[int, Adjacency] = {1: _transpose(graph.suc[1], n)}
    for s in sorted(set(int(s) for s in scales)):
        if s < 1:
            raise ValueError(f"invalid dilation {s}")
        if s == 1:
            continue
        m = base
        for _ in range(s - 1):
            m = m @ base
            m.data[:] = 1
        suc[s] = _from_csr(m)
        pre[s] = _transpose(suc[s], n)
    return replace(graph, suc=suc, pre=pre)


@dataclass(frozen=True)
class NormalizationTransform:
    """Rigid map from world coordinates into the agent frame.

    ``apply`` computes ``R(-rotation) @ (p - origin)``; ``invert`` undoes it.
    """

    origin: Point = (0.0, 0.0)
    rotation: float = 0.0

    def _rot(self, theta: float) -> np.ndarray:
        c, s = math.cos(theta), math.sin(theta)
        return np.array([[c, -s], [s, c]])

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return (pts - np.asarray(self.origin)) @ self._rot(-self.rotation).T

    def invert(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self._rot(self.rotation).T + np.asarray(self.origin)

    def then(self, inner: "NormalizationTransform") -> "NormalizationTransform":
        """Compose so that ``result.invert(p) == self.invert(inner.invert(p))``."""
        o = self.invert(np.asarray(inner.origin))
        return NormalizationTransform((float(o[0]), float(o[1])), self.rotation + inner.rotation)


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    lane_graph: LaneGraph
    actors: tuple[ActorTrack, ...]
    frame: NormalizationTransform = field(default_factory=NormalizationTransform)

    __hash__ = None  # type: ignore[assignment]

    def __post_init__(self):
        n_agents = sum(a.is_agent for a in self.actors)
        if n_agents != 1:
            raise ValueError(f"scenario {self.scenario_id}: expected exactly one agent, got {n_agents}")
        lengths = {len(a.observed) for a in self.actors}
        if len(lengths) != 1:
            raise ValueError(f"scenario {self.scenario_id}: inconsistent observation lengths {lengths}")
        flens = {len(a.future) for a in self.actors} - {0}
        if len(flens) > 1:
            raise ValueError(f"scenario {self.scenario_id}: inconsistent future lengths {flens}")

    @property
    def agent_index(self) -> int:
        return next(i for i, a in enumerate(self.actors) if a.is_agent)

    @property
    def agent(self) -> ActorTrack:
        return self.actors[self.agent_index]

    @property
    def obs_len(self) -> int:
        return len(self.actors[0].observed)

    @property
    def pred_len(self) -> int:
        return max(len(a.future) for a in self.actors)


def _map_points(points: Sequence[TrackPoint], fn) -> tuple[TrackPoint, ...]:
    out = []
    for p in points:
        if p.valid:
            q = fn(np.asarray(p.position))
            out.append(TrackPoint((float(q[0]), float(q[1])), p.step_index, True))
        else:
            out.append(TrackPoint((0.0, 0.0), p.step_index, False))
    return tuple(out)


def _map_scenario(s: Scenario, fn, rot_fn, frame: NormalizationTransform) -> Scenario:
    lanes = tuple(
        replace(ln, centerline=tuple((float(x), float(y)) for x, y in fn(np.asarray(ln.centerline))))
        for ln in s.lane_graph.lanes
    )
    nodes = []
    for nd in s.lane_graph.nodes:
        c = fn(np.asarray(nd.center))
        d = rot_fn(np.asarray(nd.direction))
        d = d / np.hypot(*d)
        nodes.append(replace(nd, center=(float(c[0]), float(c[1])), direction=(float(d[0]), float(d[1]))))
    graph = replace(s.lane_graph, lanes=lanes, nodes=tuple(nodes))
    actors = tuple(
        replace(a, observed=_map_points(a.observed, fn), future=_map_points(a.future, fn)) for a in s.actors
    )
    return Scenario(s.scenario_id, graph, actors, frame)


def agent_heading(agent: ActorTrack) -> tuple[np.ndarray, float]:
    """Step-0 position and heading angle of the agent.

    Heading comes from the displacement between the latest valid observation
    before step 0 and step 0; a displacement under ``HEADING_EPS`` gives 0.
    """
    pos, valid = agent.observed_array()
    if not valid[-1]:
        raise DegenerateHeadingError("agent step 0 is not valid")
    prev = np.flatnonzero(valid[:-1])
    if len(prev) == 0:
        raise DegenerateHeadingError("agent has fewer than 2 valid observed points")
    d = pos[-1] - pos[prev[-1]]
    if np.hypot(*d) < HEADING_EPS:
        return pos[-1], 0.0
    return pos[-1], math.atan2(d[1], d[0])


def normalize_scenario(raw: Scenario) -> Scenario:
    """Translate/rotate so the agent sits at the origin heading along +x."""
    origin, theta = agent_heading(raw.agent)
    local = NormalizationTransform((float(origin[0]), float(origin[1])), theta)
    rot = local._rot(-theta)
    frame = raw.frame.then(local)
    return _map_scenario(raw, local.apply, lambda d: rot @ d, frame)


def denormalize_points(points, frame: NormalizationTransform) -> np.ndarray:
    return frame.invert(points)


def denormalize_scenario(s: Scenario) -> Scenario:
    rot = s.frame._rot(s.frame.rotation)
    return _map_scenario(s, s.frame.invert, lambda d: rot @ d, NormalizationTransform())

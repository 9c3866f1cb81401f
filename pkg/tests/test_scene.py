import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_track, simple_scenario, straight_lane
from oracles import s_hop_reachable
from ganet.scene import (
    ActorTrack,
    DegenerateHeadingError,
    Lane,
    LaneGraph,
    LaneNode,
    NormalizationTransform,
    Scenario,
    TrackPoint,
    build_dilated_adjacency,
    denormalize_points,
    denormalize_scenario,
    normalize_scenario,
)
from ganet.synth import sample_scenario

coord = st.floats(-500, 500, allow_nan=False)


def graph_from_adj(adj1):
    """LaneGraph with arbitrary dilation-1 successors (node geometry irrelevant)."""
    n = len(adj1)
    nodes = tuple(LaneNode(i, (float(i), 0.0), (1.0, 0.0), "x") for i in range(n))
    pre = [[] for _ in range(n)]
    for i, row in enumerate(adj1):
        for j in row:
            pre[j].append(i)
    return LaneGraph((), nodes, {1: tuple(tuple(sorted(r)) for r in adj1)},
                     {1: tuple(tuple(sorted(r)) for r in pre)}, ((),) * n, ((),) * n)


# ---------------------------------------------------------------- types


def test_track_point_rejects_non_finite():
    with pytest.raises(ValueError):
        TrackPoint((math.nan, 0.0), 0)
    TrackPoint((math.nan, 0.0), 0, valid=False)  # masked rows may hold anything


def test_actor_track_step_range():
    with pytest.raises(ValueError):
        ActorTrack("a", (TrackPoint((0, 0), 0), TrackPoint((1, 0), 1)))
    t = make_track("a", [(0, 0), (1, 0)], future=[(2, 0)])
    assert [p.step_index for p in t.observed] == [-1, 0]
    assert [p.step_index for p in t.future] == [1]


def test_agent_step_zero_must_be_valid():
    with pytest.raises(ValueError):
        make_track("a", [(0, 0), (1, 0)], is_agent=True, valid=[True, False])


def test_lane_node_direction_unit_norm():
    with pytest.raises(ValueError):
        LaneNode(0, (0.0, 0.0), (1.0, 1.0), "L")


def test_scenario_requires_exactly_one_agent():
    g = LaneGraph.from_lanes([straight_lane()])
    a = make_track("a", [(0, 0), (1, 0)])
    with pytest.raises(ValueError, match="exactly one agent"):
        Scenario("s", g, (a,))


def test_lane_nodes_are_segment_midpoints():
    g = LaneGraph.from_lanes([Lane("L", ((0.0, 0.0), (2.0, 0.0), (2.0, 2.0)))])
    assert g.nodes[0].center == (1.0, 0.0) and g.nodes[0].direction == (1.0, 0.0)
    assert g.nodes[1].center == (2.0, 1.0) and g.nodes[1].direction == (0.0, 1.0)
    assert g.suc[1] == ((1,), ())


# ---------------------------------------------------------------- normalization


def test_normalize_example():
    agent = make_track("a", [(3, 5), (4, 5), (5, 5)], is_agent=True)
    s = Scenario("s", LaneGraph.from_lanes([straight_lane()]), (agent,))
    n = normalize_scenario(s)
    pos, _ = n.agent.observed_array()
    np.testing.assert_allclose(pos[-1], [0, 0], atol=1e-12)
    np.testing.assert_allclose(pos[-2], [-1, 0], atol=1e-12)


def test_normalize_stationary_agent_is_pure_translation():
    agent = make_track("a", [(2, 3)] * 4, is_agent=True)
    s = Scenario("s", LaneGraph.from_lanes([straight_lane()]), (agent,))
    n = normalize_scenario(s)
    assert n.frame.rotation == 0.0
    assert n.frame.origin == (2.0, 3.0)
    np.testing.assert_allclose(n.lane_graph.nodes[0].center, (1.0 - 2.0, -3.0))


def test_normalize_needs_two_valid_points():
    agent = make_track("a", [(0, 0), (1, 0), (2, 0)], is_agent=True, valid=[False, False, True])
    s = Scenario("s", LaneGraph.from_lanes([straight_lane()]), (agent,))
    with pytest.raises(DegenerateHeadingError):
        normalize_scenario(s)


def test_heading_uses_latest_valid_point_before_step_zero():
    agent = make_track("a", [(0, 0), (0, 7), (1, 1)], is_agent=True, valid=[True, False, True])
    s = Scenario("s", LaneGraph.from_lanes([straight_lane()]), (agent,))
    assert normalize_scenario(s).frame.rotation == pytest.approx(math.pi / 4)


def test_invalid_points_stay_masked():
    s = simple_scenario()
    a1 = s.actors[1]
    obs = tuple(p if i > 2 else TrackPoint((99.0, 99.0), p.step_index, False) for i, p in enumerate(a1.observed))
    s = Scenario("s", s.lane_graph, (s.actors[0], a1.__class__(a1.actor_id, obs, a1.future)))
    n = normalize_scenario(s)
    assert all(p.position == (0.0, 0.0) and not p.valid for p in n.actors[1].observed[:3])


def test_denormalize_points_examples():
    np.testing.assert_allclose(denormalize_points([[0.0, 0.0]], NormalizationTransform((5.0, 5.0), 0.0)), [[5, 5]])
    np.testing.assert_allclose(denormalize_points([[1.0, 0.0]], NormalizationTransform((0.0, 0.0), math.pi / 2)),
                               [[0, 1]], atol=1e-15)


def test_denormalize_points_round_trip(rng):
    pts = rng.uniform(-300, 300, (100, 2))
    f = NormalizationTransform(tuple(rng.uniform(-50, 50, 2)), float(rng.uniform(-math.pi, math.pi)))
    np.testing.assert_allclose(denormalize_points(f.apply(pts), f), pts, atol=1e-9)
    np.testing.assert_allclose(f.apply(f.invert(pts)), pts, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(coord, coord, st.floats(-10, 10), coord, coord)
def test_transform_inverse_identity(ox, oy, theta, px, py):
    f = NormalizationTransform((ox, oy), theta)
    np.testing.assert_allclose(f.invert(f.apply([px, py])), [px, py], atol=1e-9)


@pytest.mark.parametrize("kind", ["arc", "crossroads", "merge"])
def test_normalize_denormalize_round_trip(kind):
    s = sample_scenario(kind, 3)
    back = denormalize_scenario(normalize_scenario(s))
    for a, b in zip(s.actors, back.actors):
        np.testing.assert_allclose(a.observed_array()[0], b.observed_array()[0], atol=1e-9)
        np.testing.assert_allclose(a.future_array()[0], b.future_array()[0], atol=1e-9)
    np.testing.assert_allclose(s.lane_graph.centers(), back.lane_graph.centers(), atol=1e-9)
    np.testing.assert_allclose(s.lane_graph.directions(), back.lane_graph.directions(), atol=1e-9)


def test_normalized_agent_frame_invariant():
    for seed, kind in enumerate(["straight", "arc", "T-intersection", "crossroads", "merge"]):
        n = normalize_scenario(sample_scenario(kind, seed))
        pos, valid = n.agent.observed_array()
        np.testing.assert_allclose(pos[-1], 0.0, atol=1e-9)
        d = pos[-1] - pos[np.flatnonzero(valid[:-1])[-1]]
        assert d[0] > 0 and abs(d[1]) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_normalization_rigid_transform_invariance(theta, tx, ty):
    s = sample_scenario("T-intersection", 11)
    moved = Scenario(s.scenario_id, s.lane_graph, s.actors, NormalizationTransform((tx, ty), theta))
    moved = denormalize_scenario(moved)  # applies the rigid map R(theta) p + t to every coordinate
    a, b = normalize_scenario(s), normalize_scenario(moved)
    for x, y in zip(a.actors, b.actors):
        np.testing.assert_allclose(x.observed_array()[0], y.observed_array()[0], atol=1e-6)
        np.testing.assert_allclose(x.future_array()[0], y.future_array()[0], atol=1e-6)
    np.testing.assert_allclose(a.lane_graph.centers(), b.lane_graph.centers(), atol=1e-6)


# ---------------------------------------------------------------- dilated adjacency


def test_chain_dilation_example():
    g = build_dilated_adjacency(graph_from_adj([[1], [2], [3], []]), [1, 2])
    assert g.suc[2][0] == (2,) and g.suc[2][1] == (3,) and g.suc[2][2] == ()
    assert g.suc[1] == ((1,), (2,), (3,), ())


def test_scale_one_is_identity():
    adj = [[1, 2], [3], [3], []]
    g = build_dilated_adjacency(graph_from_adj(adj), [1])
    assert g.suc[1] == tuple(tuple(r) for r in adj)


def test_cycle_set_semantics():
    g = build_dilated_adjacency(graph_from_adj([[1], [0]]), [2, 3])
    assert g.suc[2] == ((0,), (1,))
    assert g.suc[3] == ((1,), (0,))


def test_dilation_rejects_inconsistent_pre():
    g = graph_from_adj([[1], []])
    bad = g.__class__(g.lanes, g.nodes, g.suc, {1: ((), ())}, g.left, g.right)
    with pytest.raises(ValueError, match="transpose"):
        build_dilated_adjacency(bad, [2])


def random_dag(rng, n=20, p=0.15):
    return [sorted(int(j) for j in range(i + 1, n) if rng.random() < p) for i in range(n)]


@pytest.mark.parametrize("seed", range(5))
def test_random_dag_matches_walk_enumeration(seed):
    adj = random_dag(np.random.default_rng(seed))
    g = build_dilated_adjacency(graph_from_adj(adj), [1, 2, 4])
    for i in range(len(adj)):
        assert set(g.suc[4][i]) == s_hop_reachable(adj, i, 4)
        assert set(g.suc[2][i]) == s_hop_reachable(adj, i, 2)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(st.integers(0, 9), max_size=3), min_size=10, max_size=10), st.sampled_from([2, 3, 4, 8]))
def test_dilation_on_random_graphs(adj, s):
    adj = [sorted(set(r)) for r in adj]
    g = build_dilated_adjacency(graph_from_adj(adj), [s])
    for i in range(10):
        assert set(g.suc[s][i]) == s_hop_reachable(adj, i, s)
    for j in range(10):
        for i in range(10):
            assert (j in g.suc[s][i]) == (i in g.pre[s][j])


@pytest.mark.parametrize("kind", ["crossroads", "merge", "arc"])
def test_generated_graph_transpose_consistency(kind):
    g = sample_scenario(kind, 5).lane_graph
    assert g.scales == (1, 2, 4, 8)
    for s in g.scales:
        for i, row in enumerate(g.suc[s]):
            assert all(0 <= j < g.num_nodes for j in row)
            assert all(i in g.pre[s][j] for j in row)
        assert sum(map(len, g.suc[s])) == sum(map(len, g.pre[s]))

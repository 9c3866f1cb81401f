import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ganet.metrics import (
    MetricReport,
    brier_min_fde,
    evaluate_forecasts,
    format_table,
    is_miss,
    min_ade,
    min_fde,
    miss_rate,
    top_k,
)


def line(end, steps=5):
    end = np.asarray(end, dtype=float)
    return np.linspace(end / steps, end, steps)


def random_forecast(rng, k=6, steps=8, spread=3.0):
    gt = rng.normal(size=(steps, 2)).cumsum(axis=0)
    traj = gt[None] + rng.normal(size=(k, steps, 2)).cumsum(axis=1) * spread / steps
    return traj, rng.normal(size=k), gt


# ---------------------------------------------------------------- examples


def test_min_fde_examples():
    gt = np.zeros((5, 2))
    assert min_fde(line((3, 4))[None], [0.0], gt, 1) == pytest.approx(5.0)
    traj = np.stack([line((3, 4)), gt, line((1, 0))])
    assert min_fde(traj, [0.1, 0.5, 0.2], gt, 3) == 0.0


def test_min_ade_examples():
    gt = line((10, 0))
    assert min_ade(gt[None], [0.0], gt, 1) == 0.0
    shifted = gt + np.array([0.0, 1.0])
    assert min_ade(shifted[None], [0.0], gt, 1) == pytest.approx(1.0)


def test_min_ade_picks_mode_by_average_not_endpoint():
    gt = np.zeros((4, 2))
    good_avg = np.array([[0.1, 0], [0.1, 0], [0.1, 0], [1.0, 0]])
    good_end = np.array([[3.0, 0], [3.0, 0], [3.0, 0], [0.0, 0]])
    traj = np.stack([good_end, good_avg])
    assert min_ade(traj, [1.0, 0.0], gt, 2) == pytest.approx(np.mean([0.1, 0.1, 0.1, 1.0]))
    assert min_fde(traj, [1.0, 0.0], gt, 2) == 0.0


def test_miss_examples():
    gt = np.zeros((5, 2))
    assert not is_miss(line((1.5, 0))[None], [0.0], gt, 1)
    ring = np.stack([line((2.5 * np.cos(a), 2.5 * np.sin(a))) for a in np.linspace(0, 6, 6)])
    assert is_miss(ring, np.zeros(6), gt, 6)
    assert not is_miss(line((2.0, 0.0))[None], [0.0], gt, 1)  # boundary counts as a hit
    assert is_miss(line((2.0 + 1e-9, 0.0))[None], [0.0], gt, 1)


def test_brier_examples():
    gt = np.zeros((5, 2))
    single = line((3, 4))[None]
    assert brier_min_fde(single, [7.0], gt, 1) == pytest.approx(min_fde(single, [7.0], gt, 1))
    two = np.stack([line((1, 0)), line((5, 0))])
    assert brier_min_fde(two, [0.3, 0.3], gt, 2) == pytest.approx(1.25)


def test_k_exceeding_modes_is_error():
    traj, sc, gt = random_forecast(np.random.default_rng(0), k=3)
    for fn in (min_fde, min_ade, brier_min_fde):
        with pytest.raises(ValueError, match="K=6"):
            fn(traj, sc, gt, 6)
    with pytest.raises(ValueError):
        min_fde(traj, sc, gt, 0)


def test_empty_evaluation_set_is_error():
    with pytest.raises(ValueError, match="empty"):
        miss_rate([], [], 6)
    with pytest.raises(ValueError, match="empty"):
        evaluate_forecasts([], [], [])


def test_top_k_is_score_ordered_and_stable():
    traj = np.arange(4)[:, None, None] * np.ones((4, 3, 2))
    t, s = top_k(traj, [0.2, 0.9, 0.2, 0.5], 3)
    assert t[:, 0, 0].tolist() == [1, 3, 0]
    assert s.tolist() == [0.9, 0.5, 0.2]


# ---------------------------------------------------------------- oracles


def test_metrics_match_oracles(rng):
    for _ in range(200):
        k_all = int(rng.integers(1, 8))
        traj, sc, gt = random_forecast(rng, k_all, int(rng.integers(1, 10)))
        if k_all > 2 and rng.random() < 0.3:
            sc[1] = sc[0]  # score tie exercises the stable ordering
        k = int(rng.integers(1, k_all + 1))
        args = traj.tolist(), sc.tolist(), gt.tolist(), k
        assert min_fde(traj, sc, gt, k) == pytest.approx(oracles.min_fde(*args), abs=1e-9)
        assert min_ade(traj, sc, gt, k) == pytest.approx(oracles.min_ade(*args), abs=1e-9)
        assert brier_min_fde(traj, sc, gt, k) == pytest.approx(oracles.brier(*args), abs=1e-9)


def test_miss_rate_matches_oracle(rng):
    cases = [random_forecast(rng, 6, 6, spread=float(rng.uniform(1, 8))) for _ in range(100)]
    for k in (1, 3, 6):
        got = miss_rate([(t, s) for t, s, _ in cases], [g for _, _, g in cases], k)
        ref = oracles.miss_rate([(t.tolist(), s.tolist(), g.tolist()) for t, s, g in cases], k)
        assert got == pytest.approx(ref, abs=1e-12)


# ---------------------------------------------------------------- properties


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotone_in_k_and_brier_gap(seed):
    rng = np.random.default_rng(seed)
    traj, sc, gt = random_forecast(rng, 6, 6)
    fde = [min_fde(traj, sc, gt, k) for k in range(1, 7)]
    miss = [is_miss(traj, sc, gt, k) for k in range(1, 7)]
    assert all(a >= b for a, b in zip(fde, fde[1:]))
    assert all(a >= b for a, b in zip(miss, miss[1:]))
    for k in range(1, 7):
        gap = brier_min_fde(traj, sc, gt, k) - min_fde(traj, sc, gt, k)
        assert 0.0 <= gap <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-np.pi, np.pi), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3),
       st.booleans())
def test_rigid_transform_invariance(seed, theta, tx, ty, mirror):
    rng = np.random.default_rng(seed)
    traj, sc, gt = random_forecast(rng, 6, 6)
    r = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    if mirror:
        r = r @ np.diag([1.0, -1.0])
    move = lambda p: p @ r.T + np.array([tx, ty])  # noqa: E731
    for fn in (min_fde, min_ade, brier_min_fde):
        for k in (1, 6):
            assert fn(move(traj), sc, move(gt), k) == pytest.approx(fn(traj, sc, gt, k), abs=1e-9)


# ---------------------------------------------------------------- report


def make_report(rng, n=5):
    cases = [random_forecast(rng) for _ in range(n)]
    return evaluate_forecasts([f"s{i}" for i in range(n)], [(t, s) for t, s, _ in cases],
                              [g for _, _, g in cases], ks=(1, 6))


def test_report_aggregates_and_schema(rng):
    rep = make_report(rng)
    assert set(rep.aggregate) == {f"{m}_{k}" for m in ("minADE", "minFDE", "MR", "brier_minFDE") for k in (1, 6)}
    assert rep.get("minFDE", 6) == pytest.approx(np.mean([r["minFDE_6"] for r in rep.per_scenario.values()]))
    assert 0.0 <= rep.get("MR", 6) <= 1.0
    assert rep.get("brier_minFDE", 6) >= rep.get("minFDE", 6)


def test_report_json_round_trip(rng):
    rep = make_report(rng)
    back = MetricReport.from_json(rep.to_json())
    assert back == rep and back.to_json() == rep.to_json()
    assert json.loads(rep.to_json())["ks"] == [1, 6]


def test_report_is_deterministic():
    a = make_report(np.random.default_rng(3)).to_json()
    b = make_report(np.random.default_rng(3)).to_json()
    assert a == b


def test_table_layout(rng):
    rows = {"lanegcn++-lite": make_report(rng), "ganet_m_3": make_report(rng)}
    text = format_table(rows).splitlines()
    assert text[0].split()[0] == "Method"
    assert "minFDE (K=6)" in text[0] and "minADE (K=1)" in text[0]
    assert text[0].index("minFDE (K=6)") < text[0].index("minADE (K=1)")
    assert [ln.split()[0] for ln in text[2:]] == ["lanegcn++-lite", "ganet_m_3"]
    assert len({len(ln) for ln in text}) == 1
    only_k6 = evaluate_forecasts(["a"], [random_forecast(rng)[:2]], [random_forecast(rng)[2]], ks=(6,))
    assert "-" in format_table({"x": only_k6}).splitlines()[2].split()

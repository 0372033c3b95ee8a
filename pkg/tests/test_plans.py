"""Scheduling plans: validation, serialization, rounding and materialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import mk_request, mk_trace
from slitsim.plans import (
    SchedulingPlan,
    largest_remainder,
    materialize_assignment,
    random_plan,
    single_location_plan,
    uniform_plan,
)
from slitsim.workload import EpochTrace

LOCS = ("aa", "bb")
B_EAST = ("east", "m7")
B_WEST = ("west", "m7")


def plan2(p_east, p_west=None):
    assignment = {B_EAST: tuple(p_east)}
    if p_west is not None:
        assignment[B_WEST] = tuple(p_west)
    return SchedulingPlan(LOCS, assignment)


def test_plan_validation():
    with pytest.raises(ValueError):
        plan2((0.5, 0.6))
    with pytest.raises(ValueError):
        plan2((1.2, -0.2))
    with pytest.raises(ValueError):
        SchedulingPlan(LOCS, {B_EAST: (1.0,)})
    plan2((0.5, 0.5))  # exact mass is fine


def test_buckets_sorted_and_vector():
    p = plan2((1.0, 0.0), (0.25, 0.75))
    assert p.buckets == (B_EAST, B_WEST)
    assert np.array_equal(p.vector(B_WEST), np.array([0.25, 0.75]))


def test_replace_bucket_normalizes():
    p = plan2((1.0, 0.0))
    q = p.replace_bucket(B_EAST, (2.0, 6.0))
    assert np.allclose(q.vector(B_EAST), [0.25, 0.75])
    r = p.replace_bucket(B_EAST, (-0.5, 0.5))
    assert np.allclose(r.vector(B_EAST), [0.0, 1.0])
    with pytest.raises(ValueError):
        p.replace_bucket(B_EAST, (0.0, 0.0))
    # the original is untouched
    assert tuple(p.vector(B_EAST)) == (1.0, 0.0)


def test_plan_id_stable_and_content_sensitive():
    a = plan2((0.5, 0.5), (1.0, 0.0))
    b = plan2((0.5, 0.5), (1.0, 0.0))
    c = plan2((0.5, 0.5), (0.0, 1.0))
    assert a.plan_id == b.plan_id
    assert a.plan_id != c.plan_id
    assert len(a.plan_id) == 12


def test_plan_dict_round_trip():
    p = plan2((1 / 3, 2 / 3), (0.125, 0.875))
    q = SchedulingPlan.from_dict(p.to_dict())
    assert q.plan_id == p.plan_id
    for b in p.buckets:
        assert np.allclose(q.vector(b), p.vector(b), atol=1e-9)


def test_plan_builders():
    buckets = [B_EAST, B_WEST]
    u = uniform_plan(LOCS, buckets)
    assert all(tuple(u.vector(b)) == (0.5, 0.5) for b in buckets)
    s = single_location_plan(LOCS, buckets, "bb")
    assert all(tuple(s.vector(b)) == (0.0, 1.0) for b in buckets)
    r = random_plan(LOCS, buckets, np.random.default_rng(5))
    r2 = random_plan(LOCS, buckets, np.random.default_rng(5))
    assert r.plan_id == r2.plan_id
    for b in buckets:
        assert abs(float(r.vector(b).sum()) - 1.0) < 1e-9


# --- largest remainder -------------------------------------------------------


def test_largest_remainder_exact_fractions_ignore_rng():
    for seed in (0, 1, 99):
        counts = largest_remainder((0.5, 0.25, 0.25), 8, np.random.default_rng(seed))
        assert counts.tolist() == [4, 2, 2]


def test_largest_remainder_hands_out_leftovers():
    counts = largest_remainder((1 / 3, 1 / 3, 1 / 3), 4, np.random.default_rng(7))
    assert counts.sum() == 4
    assert sorted(counts.tolist()) == [1, 1, 2]


def test_largest_remainder_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        largest_remainder((0.5, 0.4), 3, rng)
    with pytest.raises(ValueError):
        largest_remainder((0.5, 0.5), -1, rng)


@settings(max_examples=100, deadline=None)
@given(
    weights=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=6).filter(
        lambda w: sum(w) > 1e-6
    ),
    total=st.integers(min_value=0, max_value=200),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_largest_remainder_floor_ceil_bounds(weights, total, seed):
    f = np.asarray(weights) / sum(weights)
    counts = largest_remainder(f, total, np.random.default_rng(seed))
    assert counts.sum() == total
    assert (counts >= 0).all()
    for i, c in enumerate(counts):
        assert np.floor(f[i] * total - 1e-6) <= c <= np.ceil(f[i] * total + 1e-6)


def test_largest_remainder_tie_break_deterministic():
    f = (0.5, 0.5)
    a = largest_remainder(f, 3, np.random.default_rng(3))
    b = largest_remainder(f, 3, np.random.default_rng(3))
    assert a.tolist() == b.tolist()
    assert a.sum() == 3


# --- materialization ---------------------------------------------------------


def test_materialize_one_hot_routes_everything():
    trace = mk_trace(5)
    got = materialize_assignment(plan2((1.0, 0.0)), trace, seed=1)
    assert got == {r.request_id: "aa" for r in trace.requests}


def test_materialize_exact_split_follows_arrival_order():
    trace = mk_trace(4)
    got = materialize_assignment(plan2((0.5, 0.5)), trace, seed=1)
    ids = [r.request_id for r in trace.requests]
    assert [got[i] for i in ids] == ["aa", "aa", "bb", "bb"]


def test_materialize_planned_counts_excess_uses_fallback():
    # forecast of 10, twelve arrivals: exactly two excess requests take
    # the fallback route
    trace = mk_trace(12)
    got = materialize_assignment(
        plan2((1.0, 0.0)),
        trace,
        seed=2,
        planned_counts={B_EAST: 10},
        fallback_location={"east": "bb"},
    )
    ids = [r.request_id for r in trace.requests]
    assert [got[i] for i in ids[:10]] == ["aa"] * 10
    assert [got[i] for i in ids[10:]] == ["bb", "bb"]


def test_materialize_over_prediction_routes_all_by_plan():
    trace = mk_trace(3)
    got = materialize_assignment(
        plan2((1.0, 0.0)),
        trace,
        seed=2,
        planned_counts={B_EAST: 10},
        fallback_location={"east": "bb"},
    )
    assert set(got.values()) == {"aa"}
    assert len(got) == 3


def test_materialize_uncovered_bucket_raises():
    trace = mk_trace(2, region="west")
    with pytest.raises(KeyError):
        materialize_assignment(plan2((1.0, 0.0)), trace, seed=0)


def test_materialize_missing_fallback_raises():
    trace = mk_trace(3)
    with pytest.raises(KeyError):
        materialize_assignment(
            plan2((1.0, 0.0)), trace, seed=0, planned_counts={B_EAST: 1}, fallback_location={}
        )


def test_materialize_deterministic_per_seed():
    reqs = tuple(mk_request(i, region=("east" if i % 2 else "west"), epoch=3) for i in range(9))
    trace = EpochTrace(epoch_index=3, requests=reqs)
    plan = plan2((0.6, 0.4), (0.3, 0.7))
    a = materialize_assignment(plan, trace, seed=11)
    b = materialize_assignment(plan, trace, seed=11)
    assert a == b
    assert set(a) == {r.request_id for r in reqs}


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(min_value=0, max_value=40),
    split=st.floats(min_value=0.0, max_value=1.0),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_materialize_counts_track_plan_mass(n, split, seed):
    trace = mk_trace(n)
    got = materialize_assignment(plan2((split, 1.0 - split)), trace, seed=seed)
    assert len(got) == n
    n_aa = sum(1 for loc in got.values() if loc == "aa")
    assert abs(n_aa - split * n) <= 1.0 + 1e-9

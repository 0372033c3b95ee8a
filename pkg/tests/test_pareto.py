"""Dominance, the capped archive, crowding, selection labels, hypervolume."""

import numpy as np
import pytest

import reference_formulas as rf
from slitsim import SELECTION_LABELS, select_solutions
from slitsim.pareto import (
    ArchiveEntry,
    ParetoArchive,
    crowding_distances,
    dominance_rank,
    dominates,
    hypervolume,
    normalized_sum,
)
from slitsim.plans import SchedulingPlan
from slitsim.sustainability import ObjectiveVector


def ent(i, vec):
    """Archive entry with a distinct plan per index."""
    w = (i % 17) / 16.0
    plan = SchedulingPlan(("aa", "bb"), {("east", "m7"): (1.0 - w, w)})
    return ArchiveEntry(plan, ObjectiveVector.from_array(np.asarray(vec, dtype=float)), np.array([w]))


def filled(vectors, capacity=50):
    archive = ParetoArchive(capacity)
    for i, v in enumerate(vectors):
        archive.add(ent(i, v))
    return archive


def test_dominates_basics():
    assert dominates((1, 1, 1, 1), (2, 2, 2, 2))
    assert dominates((1, 2, 2, 2), (2, 2, 2, 2))
    assert not dominates((2, 2, 2, 2), (2, 2, 2, 2))
    assert not dominates((1, 3, 1, 1), (3, 1, 1, 1))
    assert not dominates((2, 2, 2, 2), (1, 1, 1, 1))


def test_add_rejects_weakly_dominated():
    archive = filled([(1, 1, 1, 1)])
    assert not archive.add(ent(1, (2, 2, 2, 2)))
    assert not archive.add(ent(2, (1, 1, 1, 2)))
    assert not archive.add(ent(3, (1, 1, 1, 1)))  # identical vector
    assert len(archive) == 1


def test_add_removes_members_the_candidate_dominates():
    archive = filled([(2, 2, 2, 2), (3, 1, 2, 2)])
    assert archive.add(ent(2, (1, 1, 1, 1)))
    assert len(archive) == 1
    assert archive.entries[0].vector.tolist() == [1, 1, 1, 1]


def test_incomparable_candidate_coexists():
    archive = filled([(1, 2, 0, 0), (2, 1, 0, 0)])
    assert archive.add(ent(2, (1.5, 1.5, 0, 0)))
    assert len(archive) == 3
    assert archive.non_dominated_ok()


def test_eviction_keeps_extremes_drops_least_crowded():
    a, b = (0, 10, 5, 5), (10, 0, 5, 5)
    c, d = (4, 5, 5, 5), (5, 4.5, 5, 5)
    archive = filled([a, b, c], capacity=3)
    assert archive.add(ent(3, d))
    vecs = [tuple(e.vector) for e in archive.entries]
    # crowding: c 1.05 < d 1.1, extremes a and b are protected
    assert len(vecs) == 3 and a in vecs and b in vecs and d in vecs


def test_eviction_crowding_tie_drops_newest():
    # all increments are 0.625 exactly, so c and d tie and recency decides
    a, b = (0, 16, 0, 16), (16, 0, 16, 0)
    c, d = (6, 10, 6, 10), (10, 6, 10, 6)
    archive = filled([a, b, c], capacity=3)
    assert archive.add(ent(3, d))
    vecs = [tuple(e.vector) for e in archive.entries]
    assert len(vecs) == 3 and c in vecs and d not in vecs


def test_capacity_one_keeps_the_incumbent_extreme():
    archive = ParetoArchive(1)
    assert archive.add(ent(0, (1, 2, 3, 4)))
    # incomparable newcomer is admitted, then evicted as the only non-extreme
    assert archive.add(ent(1, (2, 1, 3, 4)))
    assert len(archive) == 1
    assert archive.entries[0].vector.tolist() == [1, 2, 3, 4]


def test_capacity_validation():
    with pytest.raises(ValueError):
        ParetoArchive(0)


def test_archive_audit_under_random_pressure():
    rng = np.random.default_rng(55)
    archive = ParetoArchive(12)
    for i in range(200):
        vec = tuple(rng.integers(0, 20, size=4).astype(float))
        members = [tuple(e.vector) for e in archive.entries]
        weakly_dominated = any(
            rf.is_dominated(vec, m) or m == vec for m in members
        )
        admitted = archive.add(ent(i, vec))
        assert admitted == (not weakly_dominated)
        assert len(archive) <= 12
        assert archive.non_dominated_ok()


def test_crowding_hand_case():
    pts = np.array([[0.0, 10.0], [5.0, 5.0], [10.0, 0.0]])
    dist = crowding_distances(pts)
    assert dist[1] == 2.0
    assert np.isinf(dist[0]) and np.isinf(dist[2])
    assert np.isinf(crowding_distances(pts[:2])).all()
    assert np.isinf(crowding_distances(pts[:1])).all()


def test_normalized_sum_skips_flat_axes():
    lows = np.array([0.0, 5.0])
    highs = np.array([4.0, 5.0])
    assert normalized_sum(np.array([2.0, 5.0]), lows, highs) == 0.5
    assert normalized_sum(np.array([0.0, 5.0]), lows, lows) == 0.0


def test_dominance_rank_hand_cases():
    others = np.array([[1.0, 1, 1, 1], [3, 3, 3, 3]])
    assert dominance_rank(np.array([2.0, 2, 2, 2]), others) == 0
    assert dominance_rank(np.array([0.0, 0, 0, 0]), others) == 2
    assert dominance_rank(np.array([4.0, 4, 4, 4]), others) == -2
    assert dominance_rank(np.array([2.0, 2, 2, 2]), np.zeros((0, 4))) == 0


# --- selection labels ----------------------------------------------------------


CORNERS = [(1, 9, 9, 9), (9, 1, 9, 9), (9, 9, 1, 9), (9, 9, 9, 1), (3, 3, 3, 3)]


def test_select_solutions_labels_and_balance():
    archive = filled(CORNERS)
    assert len(archive) == 5
    picks = select_solutions(archive)
    assert set(picks) == set(SELECTION_LABELS.values())
    oracle = rf.select_label_indices(CORNERS)
    for key, label in SELECTION_LABELS.items():
        assert tuple(picks[label].vector) == CORNERS[oracle[key]]
    assert tuple(picks["SLIT-Balance"].vector) == (3, 3, 3, 3)


def test_select_solutions_scale_invariant():
    scale = np.array([1000.0, 0.001, 5.0, 7.0])
    scaled = [tuple(np.array(v) * scale) for v in CORNERS]
    base = select_solutions(filled(CORNERS))
    other = select_solutions(filled(scaled))
    for label, pick in base.items():
        assert np.allclose(other[label].vector, pick.vector * scale)


def test_select_solutions_singleton_and_empty():
    archive = filled([(2, 3, 4, 5)])
    picks = select_solutions(archive)
    assert len(picks) == 5
    assert all(tuple(p.vector) == (2, 3, 4, 5) for p in picks.values())
    with pytest.raises(ValueError):
        select_solutions(ParetoArchive(4))


# --- hypervolume ---------------------------------------------------------------


def test_hypervolume_two_point_hand_case():
    assert hypervolume([(1, 2), (2, 1)], (3, 3)) == pytest.approx(3.0)
    assert hypervolume([(1, 2), (2, 1), (1, 2)], (3, 3)) == pytest.approx(3.0)
    assert hypervolume([(2, 2)], (3, 3)) == pytest.approx(1.0)
    assert hypervolume([], (3, 3)) == 0.0


def test_hypervolume_ignores_points_at_or_beyond_reference():
    assert hypervolume([(1, 2), (2.5, 3.5)], (3, 3)) == pytest.approx(2.0)
    assert hypervolume([(3, 0.5)], (3, 3)) == 0.0


def test_hypervolume_dominated_points_add_nothing():
    assert hypervolume([(1, 1), (2, 2)], (3, 3)) == pytest.approx(4.0)


def test_hypervolume_matches_oracle_on_random_fronts():
    rng = np.random.default_rng(7)
    for dim in (2, 3, 4):
        for _ in range(6):
            pts = rng.uniform(0.0, 1.0, size=(12, dim))
            ref = tuple([1.1] * dim)
            ours = hypervolume([tuple(p) for p in pts], ref)
            theirs = rf.hypervolume([tuple(p) for p in pts], ref)
            assert ours == pytest.approx(theirs, rel=1e-9)

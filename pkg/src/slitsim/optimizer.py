"""Multi-objective plan search for one scheduling epoch.

Each epoch the optimizer seeds an archive with structured and random plans,
then alternates surrogate-guided local search from cluster-selected starts
with an evolutionary crossover/mutation pass, keeping every non-dominated
truly-evaluated plan in a capped Pareto archive. Surrogates only rank
candidates; every objective vector that reaches the archive came from a true
evaluation. The wall-clock budget is checked between iterations and the
best-so-far archive is returned when it runs out.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .infrastructure import Infrastructure, OptimizerParams
from .pareto import ArchiveEntry, ParetoArchive, dominance_rank, normalized_sum
from .perf import CarryState
from .plans import SchedulingPlan, random_plan, single_location_plan, uniform_plan
from .surrogate import GradBoostModel, featurize, fit_gradboost
from .sustainability import OBJECTIVE_NAMES, ObjectiveVector, evaluate_plan
from .workload import Bucket, EpochTrace

__all__ = [
    "PredictedWorkload",
    "SearchSample",
    "Evaluator",
    "SELECTION_LABELS",
    "initialize_population",
    "ml_select_starts",
    "local_search",
    "update_population",
    "ea_step",
    "run_epoch",
    "train_surrogates",
    "select_solutions",
    "fallback_missed",
]

Evaluator = Callable[[SchedulingPlan], ObjectiveVector]

SELECTION_LABELS = {
    "ttft": "SLIT-TTFT",
    "carbon": "SLIT-Carbon",
    "water": "SLIT-Water",
    "cost": "SLIT-Cost",
    "balance": "SLIT-Balance",
}


@dataclass(frozen=True)
class PredictedWorkload:
    """Forecast bucket counts plus the synthetic trace materialized from them."""

    counts: Mapping[Bucket, int]
    trace: EpochTrace


@dataclass(frozen=True)
class SearchSample:
    """One truly-evaluated point of a local-search trajectory."""

    features: np.ndarray
    objectives: ObjectiveVector


def _entry(plan: SchedulingPlan, objectives: ObjectiveVector, counts: Mapping[Bucket, int]) -> ArchiveEntry:
    return ArchiveEntry(plan=plan, objectives=objectives, features=featurize(plan, counts))


def update_population(archive: ParetoArchive, entry: ArchiveEntry) -> bool:
    """Admit a truly-evaluated candidate into the archive."""
    return archive.add(entry)


def initialize_population(
    prediction: PredictedWorkload,
    infra: Infrastructure,
    params: OptimizerParams,
    rng: np.random.Generator,
    evaluator: Evaluator,
) -> ParetoArchive:
    """Seed the archive: the uniform plan, one single-location plan per
    datacenter (capped by capacity), then random plans up to capacity."""
    buckets = sorted(prediction.counts)
    locations = infra.locations
    plans: list[SchedulingPlan] = [uniform_plan(locations, buckets)]
    for loc in locations[: max(params.archive_capacity - 1, 0)]:
        plans.append(single_location_plan(locations, buckets, loc))
    while len(plans) < params.archive_capacity:
        plans.append(random_plan(locations, buckets, rng))
    archive = ParetoArchive(capacity=params.archive_capacity)
    for plan in plans:
        update_population(archive, _entry(plan, evaluator(plan), prediction.counts))
    return archive


def train_surrogates(
    samples: Sequence[SearchSample], params: OptimizerParams
) -> dict[str, GradBoostModel]:
    """One boosted model per objective from accumulated trajectory samples."""
    X = np.vstack([s.features for s in samples])
    Y = np.vstack([s.objectives.as_array() for s in samples])
    models = {}
    for j, name in enumerate(OBJECTIVE_NAMES):
        models[name] = fit_gradboost(
            X,
            Y[:, j],
            n_trees=params.surrogate_trees,
            max_depth=params.surrogate_depth,
            learning_rate=params.surrogate_learning_rate,
            min_leaf=params.surrogate_min_leaf,
        )
    return models


def _surrogate_matrix(models: Mapping[str, GradBoostModel], features: np.ndarray) -> np.ndarray:
    return np.column_stack([models[name].predict(features) for name in OBJECTIVE_NAMES])


def ml_select_starts(
    archive: ParetoArchive,
    surrogates: Mapping[str, GradBoostModel] | None,
    params: OptimizerParams,
    rng: np.random.Generator,
) -> list[ArchiveEntry]:
    """Pick min(cluster_count, |archive|) diversified start points.

    Farthest-point clustering over plan feature vectors spreads the starts;
    within each cluster the surrogate's dominance rank picks the most
    promising member, falling back to a uniform random member before the
    first surrogate training.
    """
    entries = archive.entries
    if not entries:
        return []
    k = min(params.cluster_count, len(entries))
    feats = np.vstack([e.features for e in entries])

    centers = [0]
    d2 = np.sum((feats - feats[0]) ** 2, axis=1)
    while len(centers) < k:
        far = int(np.argmax(d2))
        centers.append(far)
        d2 = np.minimum(d2, np.sum((feats - feats[far]) ** 2, axis=1))
    assign = np.argmin(
        np.stack([np.sum((feats - feats[c]) ** 2, axis=1) for c in centers]), axis=0
    )

    if surrogates is not None:
        pred = _surrogate_matrix(surrogates, feats)
        lows, highs = pred.min(axis=0), pred.max(axis=0)

    starts: list[ArchiveEntry] = []
    for c in range(k):
        members = [i for i in range(len(entries)) if assign[i] == c]
        if not members:
            continue
        if surrogates is None:
            pick = members[int(rng.integers(len(members)))]
        else:
            ranks = {i: dominance_rank(pred[i], np.delete(pred, i, axis=0)) for i in members}
            pick = min(members, key=lambda i: (-ranks[i], normalized_sum(pred[i], lows, highs), i))
        starts.append(entries[pick])
    return starts


def _neighbor(plan: SchedulingPlan, step: float, rng: np.random.Generator) -> SchedulingPlan:
    """Move up to ``step`` mass between two locations of one random bucket."""
    buckets = plan.buckets
    bucket = buckets[int(rng.integers(len(buckets)))]
    probs = plan.vector(bucket)
    if len(probs) < 2 or step <= 0:
        return plan
    sources = np.nonzero(probs > 1e-12)[0]
    src = int(sources[int(rng.integers(len(sources)))])
    dst = int(rng.integers(len(probs) - 1))
    if dst >= src:
        dst += 1
    move = min(step, float(probs[src]))
    out = probs.copy()
    out[src] -= move
    out[dst] += move
    return plan.replace_bucket(bucket, out)


def local_search(
    s: ArchiveEntry,
    archive: ParetoArchive,
    surrogates: Mapping[str, GradBoostModel] | None,
    params: OptimizerParams,
    rng: np.random.Generator,
    evaluator: Evaluator,
    predicted_counts: Mapping[Bucket, int],
) -> tuple[ArchiveEntry, list[SearchSample]]:
    """One neighborhood round from start ``s``.

    Generates candidates_per_step neighbors, lets the surrogate rank them,
    truly evaluates the top fraction (at least one; a uniform random subset
    before the first training) and returns the best truly-evaluated neighbor
    by dominance rank against the archive, ties broken by the lower
    normalized objective sum. The trajectory holds every true evaluation.
    """
    neighbors = [_neighbor(s.plan, params.step, rng) for _ in range(params.candidates_per_step)]
    feats = np.vstack([featurize(p, predicted_counts) for p in neighbors])
    m = max(1, int(params.top_eval_fraction * len(neighbors)))
    arch_pts = archive.objective_matrix()

    if surrogates is None:
        chosen = sorted(rng.choice(len(neighbors), size=m, replace=False).tolist())
    else:
        pred = _surrogate_matrix(surrogates, feats)
        lows = arch_pts.min(axis=0)
        highs = arch_pts.max(axis=0)
        order = sorted(
            range(len(neighbors)),
            key=lambda i: (-dominance_rank(pred[i], arch_pts), normalized_sum(pred[i], lows, highs), i),
        )
        chosen = order[:m]

    trajectory: list[SearchSample] = []
    evaluated: list[tuple[int, ObjectiveVector]] = []
    for i in chosen:
        obj = evaluator(neighbors[i])
        evaluated.append((i, obj))
        trajectory.append(SearchSample(features=feats[i], objectives=obj))

    lows = arch_pts.min(axis=0)
    highs = arch_pts.max(axis=0)
    best_i, best_obj = min(
        evaluated,
        key=lambda io: (
            -dominance_rank(io[1].as_array(), arch_pts),
            normalized_sum(io[1].as_array(), lows, highs),
            io[0],
        ),
    )
    entry = ArchiveEntry(plan=neighbors[best_i], objectives=best_obj, features=feats[best_i])
    return entry, trajectory


def _crossover(
    a: SchedulingPlan, b: SchedulingPlan, params: OptimizerParams, rng: np.random.Generator
) -> SchedulingPlan:
    assignment = {}
    for bucket in a.buckets:
        parent = a if rng.integers(2) == 0 else b
        probs = parent.vector(bucket)
        assignment[bucket] = tuple(float(x) for x in probs)
    child = SchedulingPlan(a.locations, assignment)
    for bucket in child.buckets:
        if rng.random() < params.p_mut:
            child = _neighbor_bucket(child, bucket, params.step, rng)
    return child


def _neighbor_bucket(
    plan: SchedulingPlan, bucket: Bucket, step: float, rng: np.random.Generator
) -> SchedulingPlan:
    probs = plan.vector(bucket)
    if len(probs) < 2 or step <= 0:
        return plan
    sources = np.nonzero(probs > 1e-12)[0]
    src = int(sources[int(rng.integers(len(sources)))])
    dst = int(rng.integers(len(probs) - 1))
    if dst >= src:
        dst += 1
    move = min(float(rng.uniform(0.0, step)), float(probs[src]))
    out = probs.copy()
    out[src] -= move
    out[dst] += move
    return plan.replace_bucket(bucket, out)


def ea_step(
    archive: ParetoArchive,
    params: OptimizerParams,
    rng: np.random.Generator,
    evaluator: Evaluator,
    predicted_counts: Mapping[Bucket, int],
) -> None:
    """One evolutionary pass: |archive| crossover children, truly evaluated.

    Parents are two distinct archive members per round. Children merge into
    the archive sorted by feature vector so the outcome does not depend on
    evaluation order.
    """
    n = len(archive.entries)
    if n < 2:
        return
    children: list[SchedulingPlan] = []
    for _ in range(n):
        i = int(rng.integers(n))
        j = int(rng.integers(n - 1))
        if j >= i:
            j += 1
        children.append(_crossover(archive.entries[i].plan, archive.entries[j].plan, params, rng))
    entries = [_entry(c, evaluator(c), predicted_counts) for c in children]
    entries.sort(key=lambda e: tuple(e.features))
    for e in entries:
        update_population(archive, e)


def run_epoch(
    prediction: PredictedWorkload,
    infra: Infrastructure,
    carry: CarryState,
    params: OptimizerParams,
    evaluator: Evaluator | None = None,
) -> ParetoArchive:
    """Full plan search for one epoch; returns the Pareto archive.

    The default evaluator scores plans against the predicted trace from the
    shared carry state (never mutating it). Per-iteration flow: pick starts,
    run local search from each, merge the winners (sorted by feature vector),
    retrain the surrogate from accumulated trajectories every ``freq``
    iterations and clear them, then apply the evolutionary pass. Runs the
    whole ``gen`` iterations unless the time budget expires first; the
    deadline is also checked between local searches and before the retrain,
    so expiry never waits on more than one search or training pass.
    """
    epoch = prediction.trace.epoch_index
    rng = np.random.default_rng(np.random.SeedSequence([params.seed & 0x7FFFFFFF, epoch, 0x5EA]))
    if evaluator is None:
        def evaluator(plan: SchedulingPlan) -> ObjectiveVector:
            return evaluate_plan(plan, prediction.trace, infra, carry, seed=params.seed).objectives

    deadline = time.monotonic() + params.time_budget_s
    archive = initialize_population(prediction, infra, params, rng, evaluator)
    surrogates: dict[str, GradBoostModel] | None = None
    pending: list[SearchSample] = []

    for it in range(params.gen):
        if time.monotonic() >= deadline:
            break
        starts = ml_select_starts(archive, surrogates, params, rng)
        winners: list[ArchiveEntry] = []
        for s in starts:
            entry, trajectory = local_search(
                s, archive, surrogates, params, rng, evaluator, prediction.counts
            )
            winners.append(entry)
            pending.extend(trajectory)
            if time.monotonic() >= deadline:
                break
        winners.sort(key=lambda e: tuple(e.features))
        for w in winners:
            update_population(archive, w)
        if time.monotonic() >= deadline:
            break
        if it % params.freq == 0 and len(pending) >= params.surrogate_min_leaf:
            surrogates = train_surrogates(pending, params)
            pending = []
        ea_step(archive, params, rng, evaluator, prediction.counts)
    return archive


def select_solutions(archive: ParetoArchive) -> dict[str, ArchiveEntry]:
    """Label the archive's five operating points.

    Four labels take the per-objective minimum (ties: lowest min-max
    normalized objective sum); SLIT-Balance takes the lowest normalized sum
    outright. Objectives with zero range contribute nothing to the sum.
    """
    if not archive.entries:
        raise ValueError("cannot select from an empty archive")
    pts = archive.objective_matrix()
    lows, highs = pts.min(axis=0), pts.max(axis=0)
    sums = [normalized_sum(pts[i], lows, highs) for i in range(len(pts))]

    out: dict[str, ArchiveEntry] = {}
    for j, key in enumerate(("ttft", "carbon", "water", "cost")):
        pick = min(range(len(pts)), key=lambda i: (pts[i, j], sums[i], i))
        out[SELECTION_LABELS[key]] = archive.entries[pick]
    pick = min(range(len(pts)), key=lambda i: (sums[i], i))
    out[SELECTION_LABELS["balance"]] = archive.entries[pick]
    return out


def fallback_missed(
    predicted_counts: Mapping[Bucket, int],
    trace: EpochTrace,
    infra: Infrastructure,
) -> dict[str, str]:
    """Route requests the forecast missed to the fewest-hop datacenter.

    Returns request_id -> location_id for each request beyond its bucket's
    predicted count (in arrival order); predicted requests are absent.
    """
    seen: dict[Bucket, int] = {}
    out: dict[str, str] = {}
    nearest = {region: infra.nearest_location(region) for region in infra.regions}
    for r in trace.requests:
        seen[r.bucket] = seen.get(r.bucket, 0) + 1
        if seen[r.bucket] > max(predicted_counts.get(r.bucket, 0), 0):
            out[r.request_id] = nearest[r.origin_region]
    return out

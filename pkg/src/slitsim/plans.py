"""Scheduling plans: per-bucket probability mass over datacenter locations.

A bucket is an (origin_region, model_id) pair. A plan gives every bucket a
distribution over the configured locations; materializing a plan against a
concrete epoch of requests turns those fractions into integer per-location
request counts by largest-remainder rounding with seeded tie-breaking, then
assigns requests in arrival order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .workload import Bucket, EpochTrace, Request

__all__ = [
    "SchedulingPlan",
    "uniform_plan",
    "single_location_plan",
    "random_plan",
    "largest_remainder",
    "materialize_assignment",
]

_ATOL = 1e-9


@dataclass(frozen=True)
class SchedulingPlan:
    """Immutable bucket-to-location mass assignment.

    ``assignment`` maps bucket -> float vector aligned with ``locations``.
    Every vector is non-negative and sums to one within 1e-9.
    """

    locations: tuple[str, ...]
    assignment: Mapping[Bucket, tuple[float, ...]]

    def __post_init__(self) -> None:
        n = len(self.locations)
        for bucket, probs in self.assignment.items():
            if len(probs) != n:
                raise ValueError(f"bucket {bucket}: distribution length {len(probs)} != {n} locations")
            s = float(sum(probs))
            if abs(s - 1.0) > _ATOL:
                raise ValueError(f"bucket {bucket}: distribution sums to {s!r}, not 1")
            if any(p < -_ATOL for p in probs):
                raise ValueError(f"bucket {bucket}: negative mass")

    @property
    def buckets(self) -> tuple[Bucket, ...]:
        return tuple(sorted(self.assignment))

    def vector(self, bucket: Bucket) -> np.ndarray:
        return np.asarray(self.assignment[bucket], dtype=float)

    def replace_bucket(self, bucket: Bucket, probs: Sequence[float]) -> "SchedulingPlan":
        new = dict(self.assignment)
        new[bucket] = _clean(probs)
        return SchedulingPlan(self.locations, new)

    def to_dict(self) -> dict:
        return {
            "locations": list(self.locations),
            "assignment": {
                f"{region}|{model}": [round(p, 12) for p in probs]
                for (region, model), probs in sorted(self.assignment.items())
            },
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SchedulingPlan":
        assignment = {}
        for key, probs in doc["assignment"].items():
            region, model = key.split("|", 1)
            assignment[(region, model)] = tuple(float(p) for p in probs)
        return cls(tuple(doc["locations"]), assignment)

    @property
    def plan_id(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha1(payload.encode()).hexdigest()[:12]


def _clean(probs: Sequence[float]) -> tuple[float, ...]:
    v = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    total = v.sum()
    if total <= 0:
        raise ValueError("distribution has no mass")
    return tuple(float(x) for x in v / total)


def uniform_plan(locations: Sequence[str], buckets: Iterable[Bucket]) -> SchedulingPlan:
    n = len(locations)
    probs = tuple(1.0 / n for _ in range(n))
    return SchedulingPlan(tuple(locations), {b: probs for b in buckets})


def single_location_plan(
    locations: Sequence[str], buckets: Iterable[Bucket], location_id: str
) -> SchedulingPlan:
    idx = list(locations).index(location_id)
    probs = tuple(1.0 if i == idx else 0.0 for i in range(len(locations)))
    return SchedulingPlan(tuple(locations), {b: probs for b in buckets})


def random_plan(
    locations: Sequence[str], buckets: Iterable[Bucket], rng: np.random.Generator
) -> SchedulingPlan:
    n = len(locations)
    assignment = {b: tuple(rng.dirichlet(np.ones(n))) for b in sorted(buckets)}
    return SchedulingPlan(tuple(locations), assignment)


def largest_remainder(fractions: Sequence[float], total: int, rng: np.random.Generator) -> np.ndarray:
    """Integer counts summing to ``total`` proportional to ``fractions``.

    Floors first, then hands the remaining units to the largest fractional
    parts; exact ties are ordered by a seeded random permutation so rounding
    is reproducible but unbiased across buckets.
    """
    f = np.asarray(fractions, dtype=float)
    if total < 0:
        raise ValueError("total must be >= 0")
    if f.min() < -_ATOL or abs(f.sum() - 1.0) > 1e-6:
        raise ValueError("fractions must be a probability vector")
    raw = f * total
    counts = np.floor(raw + _ATOL).astype(int)
    leftover = total - int(counts.sum())
    if leftover > 0:
        remainders = raw - counts
        perm = rng.permutation(len(f))
        order = sorted(range(len(f)), key=lambda i: (-remainders[i], perm[i]))
        for i in order[:leftover]:
            counts[i] += 1
    return counts


def materialize_assignment(
    plan: SchedulingPlan,
    trace: EpochTrace,
    seed: int,
    planned_counts: Mapping[Bucket, int] | None = None,
    fallback_location: Mapping[str, str] | None = None,
) -> dict[str, str]:
    """Map request_id -> location_id for one epoch under a plan.

    With ``planned_counts`` given, only the first ``planned_counts[bucket]``
    requests of each bucket (arrival order) follow the plan; the excess is
    routed by ``fallback_location`` (region -> location). Without it, every
    request follows the plan and the plan must cover every observed bucket.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0x7FFFFFFF, trace.epoch_index]))
    per_bucket: dict[Bucket, list[Request]] = {}
    for r in trace.requests:
        per_bucket.setdefault(r.bucket, []).append(r)

    out: dict[str, str] = {}
    for bucket in sorted(per_bucket):
        reqs = per_bucket[bucket]
        if planned_counts is None:
            planned, missed = reqs, []
        else:
            k = min(max(planned_counts.get(bucket, 0), 0), len(reqs))
            planned, missed = reqs[:k], reqs[k:]
        if planned:
            if bucket not in plan.assignment:
                raise KeyError(f"plan does not cover bucket {bucket}")
            counts = largest_remainder(plan.vector(bucket), len(planned), rng)
            slots: list[str] = []
            for loc, c in zip(plan.locations, counts):
                slots.extend([loc] * int(c))
            for r, loc in zip(planned, slots):
                out[r.request_id] = loc
        for r in missed:
            if fallback_location is None:
                raise KeyError(f"no fallback route for excess request {r.request_id} in bucket {bucket}")
            out[r.request_id] = fallback_location[r.origin_region]
    return out

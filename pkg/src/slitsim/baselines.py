"""Comparison schedulers: one plan each, no search.

GlobalRoundRobin spreads every bucket uniformly. LeastQueue splits mass in
inverse proportion to each datacenter's carried queue depth plus the load it
has already been handed while the plan is being built, so demand settles onto
the least busy locations. NearestDatacenter sends each region's buckets
one-hot to the fewest-hop location.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .infrastructure import Infrastructure
from .perf import CarryState, dc_queue_depth
from .plans import SchedulingPlan, uniform_plan
from .workload import Bucket

__all__ = ["BASELINE_KINDS", "baseline_plan"]

BASELINE_KINDS = ("rr", "least-queue", "nearest")


def baseline_plan(
    kind: str,
    predicted_counts: Mapping[Bucket, int],
    infra: Infrastructure,
    carry: CarryState,
) -> SchedulingPlan:
    """Build the baseline plan for one epoch.

    All three kinds are deterministic in their inputs; raises ValueError for
    an unknown kind and KeyError when a bucket's region has no hop entry.
    """
    buckets = sorted(predicted_counts)
    if not buckets:
        raise ValueError("predicted_counts must name at least one bucket")
    locations = infra.locations

    if kind == "rr":
        return uniform_plan(locations, buckets)

    if kind == "nearest":
        assignment = {}
        for bucket in buckets:
            region = bucket[0]
            loc = infra.nearest_location(region)
            idx = locations.index(loc)
            assignment[bucket] = tuple(1.0 if i == idx else 0.0 for i in range(len(locations)))
        return SchedulingPlan(tuple(locations), assignment)

    if kind == "least-queue":
        depth = np.array(
            [float(dc_queue_depth(carry.get(loc, {}))) for loc in locations]
        )
        handed = np.zeros(len(locations))
        assignment = {}
        for bucket in buckets:
            weights = 1.0 / (1.0 + depth + handed)
            share = weights / weights.sum()
            assignment[bucket] = tuple(float(x) for x in share)
            handed += share * max(predicted_counts.get(bucket, 0), 0)
        return SchedulingPlan(tuple(locations), assignment)

    raise ValueError(f"unknown baseline {kind!r}; expected one of {BASELINE_KINDS}")

"""Pareto dominance, the capped non-dominated archive, and hypervolume.

All objectives are minimized. The archive admits a candidate only if no
member is at least as good everywhere, drops members the candidate dominates,
and when over capacity evicts the entry with the smallest crowding distance
while never evicting a per-objective extreme.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .plans import SchedulingPlan
from .sustainability import ObjectiveVector

__all__ = [
    "dominates",
    "ArchiveEntry",
    "ParetoArchive",
    "crowding_distances",
    "hypervolume",
    "normalized_sum",
    "dominance_rank",
]


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True when ``a`` is no worse than ``b`` everywhere and better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return bool(np.all(a <= b) and np.any(a < b))


@dataclass(frozen=True)
class ArchiveEntry:
    plan: SchedulingPlan
    objectives: ObjectiveVector
    features: np.ndarray = field(compare=False, repr=False)

    @property
    def vector(self) -> np.ndarray:
        return self.objectives.as_array()

    @property
    def plan_id(self) -> str:
        return self.plan.plan_id


def crowding_distances(points: np.ndarray) -> np.ndarray:
    """NSGA-II crowding distance; per-objective boundary points get +inf."""
    n, m = points.shape
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for j in range(m):
        order = np.argsort(points[:, j], kind="stable")
        lo, hi = points[order[0], j], points[order[-1], j]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = hi - lo
        if span <= 0:
            continue
        for k in range(1, n - 1):
            if np.isfinite(dist[order[k]]):
                dist[order[k]] += (points[order[k + 1], j] - points[order[k - 1], j]) / span
    return dist


class ParetoArchive:
    """Capped archive of mutually non-dominated plans, insertion ordered."""

    def __init__(self, capacity: int = 50):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.entries: list[ArchiveEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def objective_matrix(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, 4))
        return np.vstack([e.vector for e in self.entries])

    def add(self, entry: ArchiveEntry) -> bool:
        """Admit a truly-evaluated candidate. Returns True when it enters.

        Rejected when any member weakly dominates it (dominates, or has the
        identical objective vector); admission removes every member it
        dominates, then capacity eviction drops the lowest-crowding
        non-extreme entry if needed.
        """
        v = entry.vector
        for e in self.entries:
            ev = e.vector
            if dominates(ev, v) or bool(np.all(ev == v)):
                return False
        self.entries = [e for e in self.entries if not dominates(v, e.vector)]
        self.entries.append(entry)
        while len(self.entries) > self.capacity:
            self._evict_one()
        return True

    def _evict_one(self) -> None:
        pts = self.objective_matrix()
        extremes: set[int] = set()
        for j in range(pts.shape[1]):
            extremes.add(int(np.argmin(pts[:, j])))
        candidates = [i for i in range(len(self.entries)) if i not in extremes]
        if not candidates:
            # capacity smaller than the extreme set; drop the newest entry
            self.entries.pop()
            return
        dist = crowding_distances(pts)
        # smallest crowding goes; among ties the most recently inserted goes
        finite = [i for i in candidates if np.isfinite(dist[i])]
        if finite:
            lowest = min(dist[i] for i in finite)
            victim = max(i for i in finite if dist[i] == lowest)
        else:
            victim = max(candidates)
        self.entries.pop(victim)

    def non_dominated_ok(self) -> bool:
        """Audit helper: no member dominates another."""
        pts = self.objective_matrix()
        for i in range(len(pts)):
            for j in range(len(pts)):
                if i != j and dominates(pts[i], pts[j]):
                    return False
        return True


def normalized_sum(vector: np.ndarray, lows: np.ndarray, highs: np.ndarray) -> float:
    """Sum of min-max normalized objectives; degenerate ranges contribute 0."""
    span = highs - lows
    total = 0.0
    for j in range(len(vector)):
        if span[j] > 0:
            total += (vector[j] - lows[j]) / span[j]
    return float(total)


def dominance_rank(vector: np.ndarray, others: np.ndarray) -> int:
    """(# rows the vector dominates) - (# rows dominating it); higher is better."""
    if len(others) == 0:
        return 0
    v = np.asarray(vector, dtype=float)
    dominated_by_v = np.sum(np.all(v <= others, axis=1) & np.any(v < others, axis=1))
    dominating_v = np.sum(np.all(others <= v, axis=1) & np.any(others < v, axis=1))
    return int(dominated_by_v - dominating_v)


def _nondominated_rows(points: np.ndarray) -> np.ndarray:
    keep = []
    for i in range(len(points)):
        p = points[i]
        dominated = False
        for j in range(len(points)):
            if j == i:
                continue
            q = points[j]
            if np.all(q <= p) and np.any(q < p):
                dominated = True
                break
            if np.all(q == p) and j < i:
                dominated = True  # deduplicate
                break
        if not dominated:
            keep.append(i)
    return points[keep]


def hypervolume(points: Iterable[Sequence[float]], reference: Sequence[float]) -> float:
    """Exact dominated hypervolume against ``reference`` (minimization).

    Points at or beyond the reference in any coordinate contribute nothing.
    Recursive objective slicing; intended for the small fronts an archive
    holds, not for thousands of points.
    """
    ref = np.asarray(reference, dtype=float)
    pts = np.asarray([list(p) for p in points], dtype=float)
    if pts.size == 0:
        return 0.0
    pts = pts[np.all(pts < ref, axis=1)]
    if len(pts) == 0:
        return 0.0
    return _hv(_nondominated_rows(pts), ref)


def _hv(points: np.ndarray, ref: np.ndarray) -> float:
    d = points.shape[1]
    if d == 1:
        return float(ref[0] - points[:, 0].min())
    order = np.argsort(points[:, -1], kind="stable")
    pts = points[order]
    total = 0.0
    n = len(pts)
    for i in range(n):
        z = pts[i, -1]
        z_next = pts[i + 1, -1] if i + 1 < n else ref[-1]
        width = z_next - z
        if width <= 0:
            continue
        slab = _nondominated_rows(pts[: i + 1, :-1])
        total += width * _hv(slab, ref[:-1])
    return total

"""Time-to-first-token model and per-datacenter request placement.

TTFT for a request decomposes into model load time (zero on a warm node),
network transfer to and from the serving location, and the per-token slice of
execution time. Placement inside a datacenter is a weighted round-robin over
the id-ordered node ring where a node's weight is its type's throughput for
the request's model; admission reserves the full memory footprint up front.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .infrastructure import Datacenter, Infrastructure, NodeType, Topology
from .workload import LlmModelSpec, Request, memory_footprint

__all__ = [
    "InfeasibleNodeError",
    "LatencyBreakdown",
    "PlacementOutcome",
    "NodeSnapshot",
    "DcCarry",
    "CarryState",
    "PowerCounts",
    "load_overhead",
    "migration_latency",
    "origin_ingress_latency",
    "exec_time",
    "ttft",
    "local_schedule",
    "idle_power_counts",
    "fresh_carry",
    "dc_queue_depth",
]


class InfeasibleNodeError(ValueError):
    """The model's parameter memory alone exceeds the node's capacity."""


@dataclass(frozen=True)
class LatencyBreakdown:
    """TTFT components in seconds; migration is one-way and counted twice."""

    load_s: float
    migration_s: float
    process_s: float

    def __post_init__(self) -> None:
        if self.load_s < 0 or self.migration_s < 0 or self.process_s < 0:
            raise ValueError("latency components must be >= 0")

    @property
    def ttft_s(self) -> float:
        return self.load_s + 2.0 * self.migration_s + self.process_s


@dataclass(frozen=True)
class PlacementOutcome:
    request_id: str
    location_id: str
    node_id: str
    latency: LatencyBreakdown
    exec_time_s: float
    reassigned: bool

    @property
    def ttft_s(self) -> float:
        return self.latency.ttft_s


@dataclass(frozen=True)
class NodeSnapshot:
    """Carry record for a node that is not OFF between epochs."""

    loaded_model: str | None = None
    idle_epochs: int = 0
    queue_depth: int = 0


DcCarry = Mapping[str, NodeSnapshot]          # node_id -> snapshot
CarryState = Mapping[str, DcCarry]            # location_id -> DcCarry
PowerCounts = dict[str, dict[str, int]]       # type_id -> {"on": n, "idle": n}


def fresh_carry(infra: Infrastructure) -> dict[str, dict[str, NodeSnapshot]]:
    """All nodes OFF: the boot state."""
    return {dc.location_id: {} for dc in infra.datacenters}


def dc_queue_depth(carry_dc: DcCarry) -> int:
    return sum(s.queue_depth for s in carry_dc.values())


def load_overhead(model: LlmModelSpec, node_type: NodeType, warm: bool) -> float:
    """Seconds to pull the model's parameters onto the node; zero when warm."""
    if warm:
        return 0.0
    return model.param_memory_bytes / node_type.load_bandwidth_bytes_per_s


def migration_latency(src: str, dst: str, topology: Topology) -> float:
    """One-way network latency between two datacenters."""
    return topology.hops(src, dst) * topology.media_latency_s


def origin_ingress_latency(region: str, dst: str, topology: Topology) -> float:
    """One-way latency from a request's origin region to a datacenter."""
    return topology.origin_hop_count(region, dst) * topology.media_latency_s


def exec_time(request: Request, model: LlmModelSpec, node_type: NodeType) -> float:
    thr = node_type.throughput_tokens_per_s.get(model.model_id)
    if thr is None:
        raise KeyError(f"node type {node_type.type_id} has no throughput for model {model.model_id}")
    return request.total_tokens / thr


def _feasible(model: LlmModelSpec, node_type: NodeType) -> bool:
    return model.param_memory_bytes <= node_type.mem_capacity_bytes


def ttft(
    request: Request,
    model: LlmModelSpec,
    node_type: NodeType,
    src: str,
    dst: str,
    topology: Topology,
    warm: bool,
) -> LatencyBreakdown:
    """Full TTFT decomposition for serving ``request`` at ``dst`` from ``src``.

    Raises InfeasibleNodeError when the parameters alone cannot fit the node.
    """
    if not _feasible(model, node_type):
        raise InfeasibleNodeError(
            f"model {model.model_id} needs {model.param_memory_bytes:.3e} B, node type "
            f"{node_type.type_id} holds {node_type.mem_capacity_bytes:.3e} B"
        )
    return LatencyBreakdown(
        load_s=load_overhead(model, node_type, warm),
        migration_s=migration_latency(src, dst, topology),
        process_s=exec_time(request, model, node_type) / request.output_tokens,
    )


# --- weighted round-robin placement ------------------------------------------


class _RingTable:
    """Static per-(datacenter, model) placement data, cached on the datacenter.

    ``nodes`` is the id-ordered ring of feasible nodes; ``quota`` holds, per
    ring slot, the consecutive-request allowance derived from the node type's
    throughput for the model normalized by the slowest feasible type.
    """

    __slots__ = ("nodes", "quota", "capacity")

    def __init__(self, dc: Datacenter, node_types: Mapping[str, NodeType], model: LlmModelSpec):
        self.nodes = [(nid, tid) for nid, tid in dc.nodes if _feasible(model, node_types[tid])]
        thr = {
            tid: node_types[tid].throughput_tokens_per_s[model.model_id]
            for tid in {t for _, t in self.nodes}
        }
        base = min(thr.values()) if thr else 1.0
        per_type = {tid: max(1, int(round(t / base))) for tid, t in thr.items()}
        self.quota = [per_type[tid] for _, tid in self.nodes]
        self.capacity = [node_types[tid].mem_capacity_bytes for _, tid in self.nodes]


def _ring_table(dc: Datacenter, infra: Infrastructure, model: LlmModelSpec) -> _RingTable:
    cache = getattr(dc, "_ring_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(dc, "_ring_cache", cache)
    table = cache.get(model.model_id)
    if table is None:
        table = cache[model.model_id] = _RingTable(dc, infra.node_types, model)
    return table


def _type_of(dc: Datacenter) -> dict[str, str]:
    mapping = getattr(dc, "_type_of", None)
    if mapping is None:
        mapping = dict(dc.nodes)
        object.__setattr__(dc, "_type_of", mapping)
    return mapping


def local_schedule(
    requests: Sequence[Request],
    dc: Datacenter,
    infra: Infrastructure,
    carry_dc: DcCarry,
) -> tuple[list[PlacementOutcome], list[str], dict[str, NodeSnapshot], PowerCounts]:
    """Place one epoch of requests onto a datacenter's nodes.

    Requests must arrive pre-sorted by arrival order. Pure with respect to
    ``carry_dc``: the caller's carry is never mutated and a fresh mapping is
    returned, so concurrent evaluations can share one carry. Returns
    (outcomes, saturated_request_ids, carry_out, power_counts): saturated
    requests found no node with room for their full footprint and must be
    queued to the next epoch; power_counts tallies per-type ON/IDLE nodes for
    this epoch's energy accounting.
    """
    models = infra.models
    node_types = infra.node_types
    topology = infra.topology
    threshold = infra.constants.idle_epochs_to_off

    cursors: dict[str, tuple[int, int]] = {}  # model_id -> (ring index, quota used)
    committed: dict[str, float] = {}
    hosted: dict[str, tuple[str, str, int]] = {}  # node_id -> (type_id, loaded_model, count)
    outcomes: list[PlacementOutcome] = []
    saturated: list[str] = []

    for req in requests:
        model = models[req.model_id]
        table = _ring_table(dc, infra, model)
        n = len(table.nodes)
        if n == 0:
            saturated.append(req.request_id)
            continue
        footprint = memory_footprint(req, model)

        ptr, used = cursors.get(req.model_id, (0, 0))
        idx = ptr
        used += 1
        if used >= table.quota[ptr]:
            ptr, used = (ptr + 1) % n, 0
        cursors[req.model_id] = (ptr, used)

        placed_at = -1
        reassigned = False
        if footprint <= table.capacity[idx] - committed.get(table.nodes[idx][0], 0.0):
            placed_at = idx
        else:
            for k in range(1, n):
                j = (idx + k) % n
                if footprint <= table.capacity[j] - committed.get(table.nodes[j][0], 0.0):
                    placed_at = j
                    reassigned = True
                    break
        if placed_at < 0:
            saturated.append(req.request_id)
            continue

        nid, tid = table.nodes[placed_at]
        nt = node_types[tid]
        if nid in hosted:
            warm = hosted[nid][1] == req.model_id
        else:
            snap = carry_dc.get(nid)
            warm = snap is not None and snap.loaded_model == req.model_id
        load_s = load_overhead(model, nt, warm)
        if reassigned:
            load_s += load_overhead(model, nt, False)
        exec_s = exec_time(req, model, nt)
        latency = LatencyBreakdown(
            load_s=load_s,
            migration_s=origin_ingress_latency(req.origin_region, dc.location_id, topology),
            process_s=exec_s / req.output_tokens,
        )
        committed[nid] = committed.get(nid, 0.0) + footprint
        prev = hosted.get(nid)
        hosted[nid] = (tid, req.model_id, (prev[2] if prev else 0) + 1)
        outcomes.append(
            PlacementOutcome(req.request_id, dc.location_id, nid, latency, exec_s, reassigned)
        )

    type_of = _type_of(dc)
    carry_out: dict[str, NodeSnapshot] = {}
    power: PowerCounts = {}
    for nid, (tid, loaded, count) in hosted.items():
        carry_out[nid] = NodeSnapshot(loaded_model=loaded, idle_epochs=0, queue_depth=count)
        slot = power.setdefault(tid, {"on": 0, "idle": 0})
        slot["on"] += 1
    for nid, snap in carry_dc.items():
        if nid in hosted:
            continue
        idle = snap.idle_epochs + 1
        if idle > threshold:
            continue  # powered off, drops out of the carry
        carry_out[nid] = NodeSnapshot(loaded_model=snap.loaded_model, idle_epochs=idle, queue_depth=0)
        slot = power.setdefault(type_of[nid], {"on": 0, "idle": 0})
        slot["idle"] += 1
    return outcomes, saturated, carry_out, power


def idle_power_counts(
    dc: Datacenter, carry_dc: DcCarry, threshold: int
) -> tuple[dict[str, NodeSnapshot], PowerCounts]:
    """Carry/power bookkeeping for an epoch in which a datacenter hosts nothing."""
    type_of = _type_of(dc)
    carry_out: dict[str, NodeSnapshot] = {}
    power: PowerCounts = {}
    for nid, snap in carry_dc.items():
        idle = snap.idle_epochs + 1
        if idle > threshold:
            continue
        carry_out[nid] = NodeSnapshot(loaded_model=snap.loaded_model, idle_epochs=idle, queue_depth=0)
        slot = power.setdefault(type_of[nid], {"on": 0, "idle": 0})
        slot["idle"] += 1
    return carry_out, power

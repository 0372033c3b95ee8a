"""Energy, cost, water and carbon accounting for one scheduling epoch.

IT energy comes from per-node TDP scaled by the power-state draw ratio over
the epoch. Cooling is modeled through the CRAC coefficient of performance
with a fixed 3x multiplier for the full cooling loop, support overhead is 13%
of IT energy. Water splits into evaporative, blowdown and upstream grid
consumption; carbon into grid-intensity emissions plus the emissions embedded
in moving and treating that water (governed by the water_carbon_accounting
switch). evaluate_plan ties the chain together: it materializes a plan
against an epoch of requests, places them per datacenter and aggregates the
four objectives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .infrastructure import Constants, Datacenter, Infrastructure, PowerStateRatios
from .perf import (
    CarryState,
    NodeSnapshot,
    PlacementOutcome,
    PowerCounts,
    idle_power_counts,
    local_schedule,
)
from .plans import SchedulingPlan, materialize_assignment
from .workload import EpochTrace, Request

__all__ = [
    "KWH_TO_MJ",
    "SUPPORT_OVERHEAD",
    "COOLING_MULTIPLIER",
    "EnergyBreakdown",
    "WaterBreakdown",
    "CarbonBreakdown",
    "ObjectiveVector",
    "DcEpochRow",
    "EvaluationResult",
    "node_energy_kwh",
    "it_energy_kwh",
    "dc_energy",
    "energy_cost_usd",
    "dc_water",
    "dc_carbon",
    "account_datacenter",
    "evaluate_plan",
    "execute_assignment",
]

KWH_TO_MJ = 3.6
SUPPORT_OVERHEAD = 0.13   # lighting, UPS losses, auxiliaries, as share of IT energy
COOLING_MULTIPLIER = 3.0  # full cooling loop relative to CRAC work


@dataclass(frozen=True)
class EnergyBreakdown:
    """Per-datacenter epoch energy in kWh."""

    it_kwh: float
    crac_kwh: float
    cooling_kwh: float
    support_kwh: float
    total_kwh: float

    @classmethod
    def from_it(cls, it_kwh: float, cop: float) -> "EnergyBreakdown":
        crac = it_kwh / cop
        cooling = COOLING_MULTIPLIER * crac
        support = SUPPORT_OVERHEAD * it_kwh
        return cls(it_kwh, crac, cooling, support, it_kwh + cooling + support)


@dataclass(frozen=True)
class WaterBreakdown:
    """Litres: evaporated on site, discharged as blowdown, consumed upstream."""

    evaporated_l: float
    blowdown_l: float
    grid_l: float

    @property
    def total_l(self) -> float:
        return self.evaporated_l + self.blowdown_l + self.grid_l


@dataclass(frozen=True)
class CarbonBreakdown:
    grid_kg: float
    water_kg: float

    @property
    def total_kg(self) -> float:
        return self.grid_kg + self.water_kg


@dataclass(frozen=True)
class ObjectiveVector:
    """The four minimized objectives for one epoch (or one run aggregate)."""

    ttft_s: float
    carbon_kg: float
    water_l: float
    cost_usd: float

    def __post_init__(self) -> None:
        for name in ("ttft_s", "carbon_kg", "water_l", "cost_usd"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.ttft_s, self.carbon_kg, self.water_l, self.cost_usd])

    @classmethod
    def from_array(cls, arr) -> "ObjectiveVector":
        t, c, w, m = (float(x) for x in arr)
        return cls(t, c, w, m)

    def to_dict(self) -> dict[str, float]:
        return {
            "ttft_s": self.ttft_s,
            "carbon_kg": self.carbon_kg,
            "water_l": self.water_l,
            "cost_usd": self.cost_usd,
        }


OBJECTIVE_NAMES = ("ttft_s", "carbon_kg", "water_l", "cost_usd")


def node_energy_kwh(draw_ratio: float, tdp_w: float, seconds: float) -> float:
    """Energy of one node held in a power state for ``seconds``."""
    if draw_ratio < 0 or tdp_w < 0 or seconds < 0:
        raise ValueError("draw_ratio, tdp_w and seconds must be >= 0")
    return draw_ratio * tdp_w * seconds / 3.6e6


def it_energy_kwh(
    power_counts: PowerCounts,
    dc: Datacenter,
    infra: Infrastructure,
    epoch_length_s: float,
) -> float:
    """Sum node energy over the fleet, including OFF nodes (zero by default)."""
    ratios = infra.power_ratios
    total = 0.0
    counts_by_type: dict[str, int] = dict(dc.node_counts)
    for tid, states in power_counts.items():
        nt = infra.node_types[tid]
        on = states.get("on", 0)
        idle = states.get("idle", 0)
        total += node_energy_kwh(ratios.on, nt.tdp_w, epoch_length_s) * on
        total += node_energy_kwh(ratios.idle, nt.tdp_w, epoch_length_s) * idle
        counts_by_type[tid] = counts_by_type.get(tid, 0) - on - idle
    if ratios.off > 0:
        for tid, remaining in counts_by_type.items():
            if remaining > 0:
                nt = infra.node_types[tid]
                total += node_energy_kwh(ratios.off, nt.tdp_w, epoch_length_s) * remaining
    return total


def dc_energy(it_kwh: float, cop: float) -> EnergyBreakdown:
    """Expand IT energy into the full facility breakdown.

    The total obeys total = it * (1 + 0.13 + 3 / cop) exactly.
    """
    if cop <= 0:
        raise ValueError("cop must be positive")
    if it_kwh < 0:
        raise ValueError("it_kwh must be >= 0")
    return EnergyBreakdown.from_it(it_kwh, cop)


def energy_cost_usd(total_kwh: float, tou_usd_per_kwh: float) -> float:
    """Time-of-use electricity cost for one datacenter-epoch."""
    if total_kwh < 0 or tou_usd_per_kwh < 0:
        raise ValueError("total_kwh and tou must be >= 0")
    return total_kwh * tou_usd_per_kwh


def dc_water(
    energy: EnergyBreakdown,
    h_water_mj_per_l: float,
    blowdown_ratio: float,
    wi_l_per_kwh: float,
) -> WaterBreakdown:
    """Water use of one datacenter-epoch.

    Evaporative consumption absorbs the IT heat at ``h_water_mj_per_l``;
    blowdown discharge scales it by 1/(1 - blowdown_ratio) and is therefore
    strictly larger for any positive ratio; grid water follows total energy.
    """
    if not (0 < blowdown_ratio < 1):
        raise ValueError("blowdown_ratio must lie in (0, 1)")
    if h_water_mj_per_l <= 0:
        raise ValueError("h_water_mj_per_l must be positive")
    evaporated = energy.it_kwh * KWH_TO_MJ / h_water_mj_per_l
    blowdown = evaporated / (1.0 - blowdown_ratio)
    grid = energy.total_kwh * wi_l_per_kwh
    return WaterBreakdown(evaporated_l=evaporated, blowdown_l=blowdown, grid_l=grid)


def dc_carbon(
    energy: EnergyBreakdown,
    water: WaterBreakdown,
    ci_kg_per_kwh: float,
    ei_potable_kwh_per_l: float,
    ei_waste_kwh_per_l: float,
    accounting: str = "literal",
) -> CarbonBreakdown:
    """Carbon of one datacenter-epoch: grid emissions plus water-embedded ones.

    ``literal`` charges potable-supply energy for evaporated + blowdown litres
    and wastewater-treatment energy for the grid's upstream litres.
    ``blowdown-to-wastewater`` instead treats blowdown as the stream sent to
    wastewater treatment and leaves upstream grid water unconverted.
    """
    grid_kg = ci_kg_per_kwh * energy.total_kwh
    onsite = water.evaporated_l + water.blowdown_l
    if accounting == "literal":
        conv_kwh = onsite * ei_potable_kwh_per_l + water.grid_l * ei_waste_kwh_per_l
    elif accounting == "blowdown-to-wastewater":
        conv_kwh = onsite * ei_potable_kwh_per_l + water.blowdown_l * ei_waste_kwh_per_l
    else:
        raise ValueError(f"unknown water_carbon_accounting mode {accounting!r}")
    return CarbonBreakdown(grid_kg=grid_kg, water_kg=conv_kwh * ci_kg_per_kwh)


# --- whole-epoch accounting ---------------------------------------------------


@dataclass(frozen=True)
class DcEpochRow:
    """One datacenter's epoch ledger entry, the unit of the CSV export."""

    epoch: int
    location_id: str
    energy: EnergyBreakdown
    cost_usd: float
    water: WaterBreakdown
    carbon: CarbonBreakdown
    ttft_mean_s: float
    request_count: int


@dataclass(frozen=True)
class EvaluationResult:
    objectives: ObjectiveVector
    rows: tuple[DcEpochRow, ...]
    outcomes: tuple[PlacementOutcome, ...]
    saturated: tuple[str, ...]
    carry_out: Mapping[str, Mapping[str, NodeSnapshot]]


def account_datacenter(
    epoch: int,
    dc: Datacenter,
    infra: Infrastructure,
    power_counts: PowerCounts,
    ttfts: list[float],
    epoch_length_s: float,
) -> DcEpochRow:
    consts = infra.constants
    it = it_energy_kwh(power_counts, dc, infra, epoch_length_s)
    energy = dc_energy(it, dc.cop)
    cost = energy_cost_usd(energy.total_kwh, dc.tou(epoch))
    water = dc_water(energy, consts.h_water_mj_per_l, dc.blowdown_ratio, dc.wi(epoch))
    carbon = dc_carbon(
        energy,
        water,
        dc.ci(epoch),
        dc.ei_potable_kwh_per_l,
        dc.ei_waste_kwh_per_l,
        consts.water_carbon_accounting,
    )
    return DcEpochRow(
        epoch=epoch,
        location_id=dc.location_id,
        energy=energy,
        cost_usd=cost,
        water=water,
        carbon=carbon,
        ttft_mean_s=float(np.mean(ttfts)) if ttfts else 0.0,
        request_count=len(ttfts),
    )


def _ttft_aggregate(values: list[float], statistic: str) -> float:
    if not values:
        return 0.0
    if statistic == "p95":
        return float(np.percentile(values, 95))
    return float(np.mean(values))


def execute_assignment(
    assignment: Mapping[str, str],
    trace: EpochTrace,
    infra: Infrastructure,
    carry: CarryState,
) -> EvaluationResult:
    """Run placement and the accounting chain for an explicit request->location map.

    Saturated requests contribute one epoch length of TTFT penalty in the
    epoch that defers them and are reported so the caller can requeue them
    (each further deferral costs another epoch of penalty). Pure: ``carry``
    is not mutated.
    """
    epoch = trace.epoch_index
    epoch_length_s = trace.epoch_length_s
    consts = infra.constants
    per_dc_requests: dict[str, list[Request]] = {loc: [] for loc in infra.locations}
    for r in trace.requests:
        loc = assignment.get(r.request_id)
        if loc is None:
            raise KeyError(f"no assignment for request {r.request_id}")
        per_dc_requests[loc].append(r)

    rows: list[DcEpochRow] = []
    outcomes: list[PlacementOutcome] = []
    saturated: list[str] = []
    all_ttfts: list[float] = []
    carry_out: dict[str, Mapping[str, NodeSnapshot]] = {}
    total_cost = 0.0
    total_water = 0.0
    total_carbon = 0.0

    for dc in infra.datacenters:
        carry_dc = carry.get(dc.location_id, {})
        reqs = per_dc_requests[dc.location_id]
        if reqs:
            dc_outcomes, dc_sat, new_carry, power = local_schedule(reqs, dc, infra, carry_dc)
        else:
            dc_outcomes, dc_sat = [], []
            new_carry, power = idle_power_counts(dc, carry_dc, consts.idle_epochs_to_off)
        ttfts = [o.ttft_s for o in dc_outcomes]
        ttfts.extend(epoch_length_s for _ in dc_sat)
        row = account_datacenter(epoch, dc, infra, power, ttfts, epoch_length_s)
        rows.append(row)
        outcomes.extend(dc_outcomes)
        saturated.extend(dc_sat)
        all_ttfts.extend(ttfts)
        carry_out[dc.location_id] = new_carry
        total_cost += row.cost_usd
        total_water += row.water.total_l
        total_carbon += row.carbon.total_kg

    objectives = ObjectiveVector(
        ttft_s=_ttft_aggregate(all_ttfts, consts.ttft_statistic),
        carbon_kg=total_carbon,
        water_l=total_water,
        cost_usd=total_cost,
    )
    return EvaluationResult(
        objectives=objectives,
        rows=tuple(rows),
        outcomes=tuple(outcomes),
        saturated=tuple(saturated),
        carry_out=carry_out,
    )


def evaluate_plan(
    plan: SchedulingPlan,
    trace: EpochTrace,
    infra: Infrastructure,
    carry: CarryState,
    seed: int = 0,
) -> EvaluationResult:
    """Score a plan against one epoch of requests.

    Deterministic for fixed inputs and seed (the seed only breaks rounding
    ties when fractional counts are materialized). Saturation is folded into
    the TTFT objective as a one-epoch penalty per unplaced request; the call
    never raises for an overloaded plan.
    """
    assignment = materialize_assignment(plan, trace, seed)
    return execute_assignment(assignment, trace, infra, carry)

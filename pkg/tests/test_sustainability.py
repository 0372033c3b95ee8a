"""Energy, cost, water and carbon accounting, and whole-epoch evaluation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import reference_formulas as rf
from helpers import build_snug, build_tiny, mk_request, mk_trace
from slitsim.perf import NodeSnapshot, fresh_carry
from slitsim.plans import SchedulingPlan
from slitsim.sustainability import (
    OBJECTIVE_NAMES,
    EnergyBreakdown,
    ObjectiveVector,
    account_datacenter,
    dc_carbon,
    dc_energy,
    dc_water,
    energy_cost_usd,
    evaluate_plan,
    execute_assignment,
    it_energy_kwh,
    node_energy_kwh,
)
from slitsim.workload import EpochTrace

CFG = build_tiny()
INFRA = CFG.infra
B_EAST = ("east", "m7")


# --- single formulas ----------------------------------------------------------


def test_node_energy_known_values():
    assert node_energy_kwh(1.0, 2000.0, 900.0) == rf.node_kwh(1.0, 2000.0, 900.0) == 0.5
    assert node_energy_kwh(0.3, 2000.0, 900.0) == pytest.approx(0.15, rel=1e-12)
    with pytest.raises(ValueError):
        node_energy_kwh(-0.1, 2000.0, 900.0)


def test_dc_energy_breakdown_known_values():
    e = dc_energy(100.0, 4.0)
    ref = rf.energy_parts(100.0, 4.0)
    assert e.it_kwh == ref["it"] == 100.0
    assert e.crac_kwh == ref["crac"] == 25.0
    assert e.cooling_kwh == ref["cooling"] == 75.0
    assert e.support_kwh == ref["support"] == 13.0
    assert e.total_kwh == ref["total"] == 188.0


def test_dc_energy_total_approaches_overhead_floor():
    # with free cooling only the 13% support overhead remains
    assert dc_energy(100.0, (1e15)).total_kwh == pytest.approx(113.0, rel=1e-9)
    with pytest.raises(ValueError):
        dc_energy(100.0, 0.0)
    with pytest.raises(ValueError):
        dc_energy(-1.0, 4.0)


@settings(max_examples=200, deadline=None)
@given(
    it=st.floats(min_value=0.0, max_value=1e6),
    cop=st.floats(min_value=0.1, max_value=100.0),
)
def test_energy_identity(it, cop):
    e = dc_energy(it, cop)
    assert e.total_kwh == pytest.approx(it * (1.13 + 3.0 / cop), rel=1e-12, abs=1e-15)
    assert e.total_kwh == e.it_kwh + e.cooling_kwh + e.support_kwh


def test_cost_known_values():
    assert energy_cost_usd(188.0, 0.10) == rf.cost_usd(188.0, 0.10) == 18.8
    with pytest.raises(ValueError):
        energy_cost_usd(-1.0, 0.1)


def test_two_site_cost_adds_up():
    assert energy_cost_usd(100.0, 0.10) + energy_cost_usd(100.0, 0.20) == 30.0


def test_water_known_values():
    w = dc_water(dc_energy(100.0, 4.0), 2.26, 0.2, 0.2)
    assert w.evaporated_l == rf.evaporated_l(100.0, 2.26) == 159.2920353982301
    assert w.blowdown_l == rf.blowdown_l(w.evaporated_l, 0.2) == 199.1150442477876
    assert w.grid_l == rf.grid_water_l(188.0, 0.2) == 37.6
    assert w.total_l == w.evaporated_l + w.blowdown_l + w.grid_l


def test_water_validation():
    e = dc_energy(10.0, 4.0)
    for bad in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            dc_water(e, 2.26, bad, 0.2)
    with pytest.raises(ValueError):
        dc_water(e, 0.0, 0.2, 0.2)


@settings(max_examples=200, deadline=None)
@given(
    it=st.floats(min_value=1e-9, max_value=1e6),
    ratio=st.floats(min_value=1e-6, max_value=1.0 - 1e-6),
)
def test_blowdown_strictly_exceeds_evaporation(it, ratio):
    w = dc_water(dc_energy(it, 4.0), 2.26, ratio, 0.0)
    assert w.blowdown_l > w.evaporated_l


def test_carbon_known_values():
    e = dc_energy(100.0, 4.0)
    w = dc_water(e, 2.26, 0.2, 0.2)
    c = dc_carbon(e, w, 0.4, 0.005, 0.002, "literal")
    assert c.grid_kg == rf.grid_carbon_kg(188.0, 0.4) == 75.2
    assert c.water_kg == pytest.approx(
        rf.water_carbon_kg(w.evaporated_l, w.blowdown_l, w.grid_l, 0.005, 0.002, 0.4, "literal"),
        rel=1e-12,
    )
    assert c.water_kg == pytest.approx(0.7468941592920354, rel=1e-12)


def test_carbon_alternative_accounting_mode():
    e = dc_energy(100.0, 4.0)
    w = dc_water(e, 2.26, 0.2, 0.2)
    c = dc_carbon(e, w, 0.4, 0.005, 0.002, "blowdown-to-wastewater")
    assert c.water_kg == pytest.approx(
        rf.water_carbon_kg(
            w.evaporated_l, w.blowdown_l, w.grid_l, 0.005, 0.002, 0.4, "blowdown-to-wastewater"
        ),
        rel=1e-12,
    )
    assert c.water_kg == pytest.approx(0.8761061946902656, rel=1e-12)
    assert c.water_kg > rf.water_carbon_kg(
        w.evaporated_l, w.blowdown_l, w.grid_l, 0.005, 0.002, 0.4, "literal"
    )
    with pytest.raises(ValueError):
        dc_carbon(e, w, 0.4, 0.005, 0.002, "bogus")


def test_zero_grid_intensity_zeroes_all_carbon():
    e = dc_energy(50.0, 4.0)
    w = dc_water(e, 2.26, 0.2, 0.3)
    c = dc_carbon(e, w, 0.0, 0.005, 0.002)
    assert c.grid_kg == 0.0 and c.water_kg == 0.0 and c.total_kg == 0.0


def test_zero_it_energy_zeroes_all_water():
    w = dc_water(dc_energy(0.0, 4.0), 2.26, 0.2, 0.6)
    assert w.evaporated_l == 0.0 and w.blowdown_l == 0.0 and w.grid_l == 0.0


def test_objective_vector_contract():
    v = ObjectiveVector(1.0, 2.0, 3.0, 4.0)
    assert OBJECTIVE_NAMES == ("ttft_s", "carbon_kg", "water_l", "cost_usd")
    assert v.as_array().tolist() == [1.0, 2.0, 3.0, 4.0]
    assert ObjectiveVector.from_array(v.as_array()) == v
    with pytest.raises(ValueError):
        ObjectiveVector(-1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        ObjectiveVector(float("nan"), 0.0, 0.0, 0.0)


# --- fleet energy -------------------------------------------------------------


def test_it_energy_counts_states():
    dc = INFRA.datacenter("aa")
    power = {"g2": {"on": 2, "idle": 1}}
    got = it_energy_kwh(power, dc, INFRA, 900.0)
    assert got == pytest.approx(2 * 0.5 + 1 * 0.15, rel=1e-12)


def test_it_energy_off_draw():
    cfg = build_tiny(lambda d: d["power_ratios"].update(off=0.1))
    dc = cfg.infra.datacenter("aa")
    got = it_energy_kwh({"g2": {"on": 1, "idle": 0}}, dc, cfg.infra, 900.0)
    # one node on, three off at a tenth draw
    assert got == pytest.approx(0.5 + 3 * rf.node_kwh(0.1, 2000.0, 900.0), rel=1e-12)


def test_account_datacenter_matches_reference_chain():
    dc = INFRA.datacenter("aa")
    row = account_datacenter(0, dc, INFRA, {"g2": {"on": 4, "idle": 0}}, [0.5, 0.7], 900.0)
    ref = rf.dc_epoch_ledger(2.0, 4.0, 0.10, 0.40, 0.20, 0.2, 2.26, 0.005, 0.002, "literal")
    assert row.energy.it_kwh == pytest.approx(ref["it"], rel=1e-12)
    assert row.energy.total_kwh == pytest.approx(ref["total"], rel=1e-12)
    assert row.cost_usd == pytest.approx(ref["cost"], rel=1e-12)
    assert row.water.evaporated_l == pytest.approx(ref["evaporated_l"], rel=1e-12)
    assert row.water.blowdown_l == pytest.approx(ref["blowdown_l"], rel=1e-12)
    assert row.water.grid_l == pytest.approx(ref["grid_l"], rel=1e-12)
    assert row.water.total_l == pytest.approx(ref["water_total_l"], rel=1e-12)
    assert row.carbon.grid_kg == pytest.approx(ref["grid_carbon_kg"], rel=1e-12)
    assert row.carbon.water_kg == pytest.approx(ref["water_carbon_kg"], rel=1e-12)
    assert row.ttft_mean_s == pytest.approx(0.6, rel=1e-12)
    assert row.request_count == 2


@settings(max_examples=30, deadline=None)
@given(extra=st.integers(min_value=1, max_value=4))
def test_more_on_nodes_never_cheaper(extra):
    dc = INFRA.datacenter("aa")
    base = account_datacenter(0, dc, INFRA, {"g2": {"on": 0, "idle": 0}}, [], 900.0)
    more = account_datacenter(0, dc, INFRA, {"g2": {"on": extra, "idle": 0}}, [], 900.0)
    assert more.energy.total_kwh > base.energy.total_kwh
    assert more.cost_usd > base.cost_usd
    assert more.water.total_l > base.water.total_l
    assert more.carbon.total_kg > base.carbon.total_kg


# --- whole-epoch evaluation ----------------------------------------------------


def one_hot(loc):
    probs = tuple(1.0 if x == loc else 0.0 for x in INFRA.locations)
    return SchedulingPlan(INFRA.locations, {B_EAST: probs})


def spread():
    return SchedulingPlan(INFRA.locations, {B_EAST: (0.5, 0.5)})


def ledger_aa(it):
    return rf.dc_epoch_ledger(it, 4.0, 0.10, 0.40, 0.20, 0.2, 2.26, 0.005, 0.002, "literal")


def ledger_bb(it):
    return rf.dc_epoch_ledger(it, 2.0, 0.20, 0.10, 0.60, 0.5, 2.26, 0.005, 0.002, "literal")


def check_row(row, ref):
    assert row.energy.it_kwh == pytest.approx(ref["it"], rel=1e-9, abs=1e-15)
    assert row.energy.crac_kwh == pytest.approx(ref["crac"], rel=1e-9, abs=1e-15)
    assert row.energy.cooling_kwh == pytest.approx(ref["cooling"], rel=1e-9, abs=1e-15)
    assert row.energy.support_kwh == pytest.approx(ref["support"], rel=1e-9, abs=1e-15)
    assert row.energy.total_kwh == pytest.approx(ref["total"], rel=1e-9, abs=1e-15)
    assert row.cost_usd == pytest.approx(ref["cost"], rel=1e-9, abs=1e-15)
    assert row.water.evaporated_l == pytest.approx(ref["evaporated_l"], rel=1e-9, abs=1e-15)
    assert row.water.blowdown_l == pytest.approx(ref["blowdown_l"], rel=1e-9, abs=1e-15)
    assert row.water.grid_l == pytest.approx(ref["grid_l"], rel=1e-9, abs=1e-15)
    assert row.carbon.grid_kg == pytest.approx(ref["grid_carbon_kg"], rel=1e-9, abs=1e-15)
    assert row.carbon.water_kg == pytest.approx(ref["water_carbon_kg"], rel=1e-9, abs=1e-15)


def test_concentrated_plan_full_chain():
    """Four identical requests to one site: every figure recomputed by hand."""
    trace = mk_trace(4)
    res = evaluate_plan(one_hot("aa"), trace, INFRA, fresh_carry(INFRA), seed=0)

    # each request lands on its own cold node: load .875, one hop each way,
    # 60 tokens at 4000 tok/s split over 20 output tokens
    t = rf.ttft_seconds(0.875, 0.01, 60 / 4000.0, 20)
    assert t == pytest.approx(0.89575, rel=1e-12)
    assert [o.ttft_s for o in res.outcomes] == pytest.approx([t] * 4, rel=1e-12)
    assert res.objectives.ttft_s == pytest.approx(t, rel=1e-9)

    row_aa = next(r for r in res.rows if r.location_id == "aa")
    row_bb = next(r for r in res.rows if r.location_id == "bb")
    check_row(row_aa, ledger_aa(4 * 0.5))
    assert row_bb.energy.total_kwh == 0.0
    assert row_bb.water.total_l == 0.0
    assert row_bb.carbon.total_kg == 0.0
    assert row_bb.cost_usd == 0.0

    ref = ledger_aa(2.0)
    assert res.objectives.cost_usd == pytest.approx(ref["cost"], rel=1e-9)
    assert res.objectives.water_l == pytest.approx(ref["water_total_l"], rel=1e-9)
    assert res.objectives.carbon_kg == pytest.approx(
        ref["grid_carbon_kg"] + ref["water_carbon_kg"], rel=1e-9
    )


def test_spread_plan_full_chain():
    trace = mk_trace(4)
    res = evaluate_plan(spread(), trace, INFRA, fresh_carry(INFRA), seed=0)

    t_aa = rf.ttft_seconds(0.875, 0.01, 60 / 4000.0, 20)
    t_bb = rf.ttft_seconds(0.875, 0.06, 60 / 4000.0, 20)
    assert res.objectives.ttft_s == pytest.approx((2 * t_aa + 2 * t_bb) / 4, rel=1e-9)

    row_aa = next(r for r in res.rows if r.location_id == "aa")
    row_bb = next(r for r in res.rows if r.location_id == "bb")
    check_row(row_aa, ledger_aa(1.0))
    check_row(row_bb, ledger_bb(1.0))

    ref_aa, ref_bb = ledger_aa(1.0), ledger_bb(1.0)
    assert res.objectives.cost_usd == pytest.approx(ref_aa["cost"] + ref_bb["cost"], rel=1e-9)
    assert res.objectives.water_l == pytest.approx(
        ref_aa["water_total_l"] + ref_bb["water_total_l"], rel=1e-9
    )
    assert res.objectives.carbon_kg == pytest.approx(
        ref_aa["grid_carbon_kg"]
        + ref_aa["water_carbon_kg"]
        + ref_bb["grid_carbon_kg"]
        + ref_bb["water_carbon_kg"],
        rel=1e-9,
    )

    # trade-off sanity: concentrating at the cheap site costs less but the
    # spread halves bb's expensive water draw per request
    conc = evaluate_plan(one_hot("aa"), trace, INFRA, fresh_carry(INFRA), seed=0)
    assert conc.objectives.cost_usd < res.objectives.cost_usd
    assert conc.objectives.ttft_s < res.objectives.ttft_s


def test_objectives_are_row_sums():
    trace = mk_trace(7)
    res = evaluate_plan(spread(), trace, INFRA, fresh_carry(INFRA), seed=3)
    assert res.objectives.cost_usd == pytest.approx(
        sum(r.cost_usd for r in res.rows), rel=1e-9
    )
    assert res.objectives.water_l == pytest.approx(
        sum(r.water.total_l for r in res.rows), rel=1e-9
    )
    assert res.objectives.carbon_kg == pytest.approx(
        sum(r.carbon.total_kg for r in res.rows), rel=1e-9
    )


def test_empty_trace_fresh_carry_is_free():
    res = evaluate_plan(one_hot("aa"), EpochTrace(0, ()), INFRA, fresh_carry(INFRA), seed=0)
    assert res.objectives == ObjectiveVector(0.0, 0.0, 0.0, 0.0)
    assert res.outcomes == () and res.saturated == ()


def test_empty_trace_warm_carry_pays_idle_floor():
    carry = {"aa": {"aa-g2-0000": NodeSnapshot(loaded_model="m7")}, "bb": {}}
    res = evaluate_plan(one_hot("aa"), EpochTrace(0, ()), INFRA, carry, seed=0)
    row_aa = next(r for r in res.rows if r.location_id == "aa")
    assert row_aa.energy.it_kwh == pytest.approx(0.15, rel=1e-12)
    assert res.objectives.ttft_s == 0.0
    assert res.objectives.cost_usd > 0.0


def test_saturated_requests_pay_epoch_penalty():
    infra = build_snug().infra
    plan = SchedulingPlan(("dd",), {("east", "mx"): (1.0,)})
    trace = EpochTrace(
        0, tuple(mk_request(i, model="mx", inp=10, out=5) for i in range(3))
    )
    res = evaluate_plan(plan, trace, infra, fresh_carry(infra), seed=0)
    assert res.saturated == ("r0002",)
    placed = [o.ttft_s for o in res.outcomes]
    assert res.objectives.ttft_s == pytest.approx((sum(placed) + 900.0) / 3, rel=1e-9)


def test_ttft_statistic_p95():
    cfg = build_tiny(lambda d: d["constants"].update(ttft_statistic="p95"))
    trace = mk_trace(9)
    res = evaluate_plan(one_hot("aa"), trace, cfg.infra, fresh_carry(cfg.infra), seed=0)
    values = [o.ttft_s for o in res.outcomes]
    assert res.objectives.ttft_s == pytest.approx(float(np.percentile(values, 95)), rel=1e-12)


def test_execute_assignment_requires_full_cover():
    trace = mk_trace(2)
    with pytest.raises(KeyError):
        execute_assignment({"r0000": "aa"}, trace, INFRA, fresh_carry(INFRA))


def test_evaluate_plan_pure_and_deterministic():
    trace = mk_trace(5)
    carry = {"aa": {"aa-g2-0001": NodeSnapshot(loaded_model="m7")}, "bb": {}}
    before = {loc: dict(c) for loc, c in carry.items()}
    a = evaluate_plan(spread(), trace, INFRA, carry, seed=7)
    b = evaluate_plan(spread(), trace, INFRA, carry, seed=7)
    assert carry == before
    assert a == b


def test_carry_out_tracks_hosting():
    trace = mk_trace(2)
    res = evaluate_plan(one_hot("bb"), trace, INFRA, fresh_carry(INFRA), seed=0)
    assert set(res.carry_out["bb"]) == {"bb-g2-0000", "bb-g2-0001"}
    assert res.carry_out["aa"] == {}

"""Batch runs, the epoch state machine, output files, report math."""

import csv
import json
import math
from dataclasses import replace

import pytest

from helpers import build_tiny, build_snug, mk_trace, tiny_doc
from slitsim.engine import (
    CSV_COLUMNS,
    SCHEDULERS,
    SimulatorState,
    combine_reports,
    config_hash,
    run_simulation,
)
from slitsim.optimizer import SELECTION_LABELS
from slitsim.workload import generate_trace

CFG = build_tiny()


def read_csv(path):
    with path.open() as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_batch_baseline_outputs(tmp_path):
    report = run_simulation(CFG, "rr", seed=0, out_dir=tmp_path)
    assert report.epochs == 6
    assert report.label == "rr"
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "per_epoch.csv").exists()
    assert (tmp_path / "manifest.json").exists()
    assert not list(tmp_path.glob("archive_*.json"))  # baselines skip snapshots

    header, rows = read_csv(tmp_path / "per_epoch.csv")
    assert header == CSV_COLUMNS
    assert len(rows) == 6 * 2
    for row in rows:
        assert row[1] in ("aa", "bb")
        [float(x) for x in row[2:]]

    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config_sha256"] == config_hash(CFG)
    assert manifest["scheduler"] == "rr" and manifest["label"] == "rr"
    assert manifest["epochs"] == 6 and manifest["seed"] == 0
    assert manifest["defaults_applied"] == []

    on_disk = json.loads((tmp_path / "report.json").read_text())
    assert on_disk == report.to_dict()


def test_report_aggregates_recompute_from_records():
    report = run_simulation(CFG, "least-queue", seed=1)
    agg = report.aggregates()
    assert agg["carbon_kg"] == pytest.approx(
        sum(r.realized.carbon_kg for r in report.records), rel=1e-12
    )
    assert agg["water_l"] == pytest.approx(
        sum(r.realized.water_l for r in report.records), rel=1e-12
    )
    assert agg["cost_usd"] == pytest.approx(
        sum(r.realized.cost_usd for r in report.records), rel=1e-12
    )
    samples = sum(r.ttft_samples for r in report.records)
    weighted = sum(r.realized.ttft_s * r.ttft_samples for r in report.records) / samples
    assert agg["ttft_s"] == pytest.approx(weighted, rel=1e-12)


def test_csv_rows_conserve_the_report_totals(tmp_path):
    report = run_simulation(CFG, "rr", seed=2, out_dir=tmp_path)
    agg = report.aggregates()
    _, rows = read_csv(tmp_path / "per_epoch.csv")
    cols = {name: [float(r[i]) for r in rows] for i, name in enumerate(CSV_COLUMNS) if i >= 2}
    assert sum(cols["cost_usd"]) == pytest.approx(agg["cost_usd"], rel=1e-7)
    assert sum(cols["c_grid_kg"]) + sum(cols["c_water_kg"]) == pytest.approx(
        agg["carbon_kg"], rel=1e-7
    )
    water = sum(cols["w_evap_l"]) + sum(cols["w_blow_l"]) + sum(cols["w_grid_l"])
    assert water == pytest.approx(agg["water_l"], rel=1e-7)
    for it, crac, cooling, support, total in zip(
        cols["it_kwh"], cols["crac_kwh"], cols["cooling_kwh"], cols["support_kwh"], cols["total_kwh"]
    ):
        assert cooling == pytest.approx(3.0 * crac, rel=1e-7)
        assert total == pytest.approx(it + cooling + support, rel=1e-7)


def test_slit_run_writes_archive_snapshots(tmp_path):
    report = run_simulation(CFG, "slit", select="balance", seed=0, out_dir=tmp_path)
    assert report.label == "slit-balance"
    snaps = sorted(tmp_path.glob("archive_*.json"))
    assert [p.name for p in snaps] == [f"archive_{e:05d}.json" for e in range(6)]
    labels = set(SELECTION_LABELS.values())
    for path in snaps:
        doc = json.loads(path.read_text())
        assert doc["entries"]
        ids = {e["plan_id"] for e in doc["entries"]}
        seen = set()
        for e in doc["entries"]:
            assert set(e["labels"]) <= labels
            seen |= set(e["labels"])
            assert set(e["objectives"]) == {"ttft_s", "carbon_kg", "water_l", "cost_usd"}
        assert seen == labels
        # the committed plan is one of the snapshot entries
        assert report.records[doc["epoch"]].plan_id in ids


def test_two_seeded_slit_runs_are_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    run_simulation(CFG, "slit", select="balance", seed=3, out_dir=a)
    run_simulation(CFG, "slit", select="balance", seed=3, out_dir=b)
    names = ["report.json", "per_epoch.csv", "manifest.json"] + [
        f"archive_{e:05d}.json" for e in range(6)
    ]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_interactive_loop_reproduces_the_batch_run():
    batch = run_simulation(CFG, "slit", select="balance", seed=5)
    state = SimulatorState(CFG, "slit", seed=5)
    while True:
        ctx = state.prepare()
        if ctx is None:
            break
        state.execute(ctx, ctx.labels["SLIT-Balance"], "SLIT-Balance")
    assert state.records == batch.records


def test_saturated_requests_requeue_across_epochs():
    cfg = build_snug()
    traces = [
        mk_trace(5, epoch=0, model="mx"),
        mk_trace(0, epoch=1, model="mx"),
        mk_trace(0, epoch=2, model="mx"),
    ]
    report = run_simulation(cfg, "rr", seed=0, traces=traces)
    got = [
        (r.observed_requests, r.queued_requests, r.saturated_requests, r.ttft_samples)
        for r in report.records
    ]
    # two one-request nodes: 5 arrivals drain as 2, 2, 1 over three epochs
    assert got == [(5, 0, 3, 5), (0, 3, 1, 3), (0, 1, 0, 1)]
    assert report.records[1].fallback_requests == 3  # replays exceed the zero forecast
    assert report.records[2].fallback_requests == 1


def test_forecast_follows_the_predictor_after_warmup():
    cfg = build_tiny(lambda d: d["predictor"].update(warmup_epochs=2))
    traces = [mk_trace(n, epoch=e) for e, n in enumerate((4, 6, 8, 10))]
    report = run_simulation(cfg, "rr", seed=0, traces=traces)
    by_epoch = [r.fallback_requests for r in report.records]
    # warmup epochs see the observed counts; epoch 2 runs on a last-value
    # forecast of 6 against 8 arrivals; by epoch 3 the two-point line is exact
    assert by_epoch == [0, 0, 2, 0]
    assert [r.saturated_requests for r in report.records] == [0, 0, 0, 0]


def test_empty_trace_run_accounts_to_zero(tmp_path):
    traces = [mk_trace(0, epoch=e) for e in range(3)]
    report = run_simulation(CFG, "rr", seed=0, traces=traces, out_dir=tmp_path)
    assert report.aggregates() == {
        "ttft_s": 0.0,
        "carbon_kg": 0.0,
        "water_l": 0.0,
        "cost_usd": 0.0,
    }
    assert all(len(r.rows) == 2 for r in report.records)


def test_combine_reports_normalizes_to_the_named_run(tmp_path):
    d_rr = tmp_path / "rr"
    d_lq = tmp_path / "lq"
    run_simulation(CFG, "rr", seed=0, out_dir=d_rr)
    run_simulation(CFG, "least-queue", seed=0, out_dir=d_lq)
    combined = combine_reports([d_rr, d_lq], normalize_to="least-queue")
    assert combined["normalize_to"] == "least-queue"
    assert [row["label"] for row in combined["rows"]] == ["least-queue", "rr"]
    base = combined["rows"][0]
    assert all(base[f"{k}_norm"] == 1.0 for k in ("ttft_s", "carbon_kg", "water_l", "cost_usd"))
    rr_doc = json.loads((d_rr / "report.json").read_text())
    lq_doc = json.loads((d_lq / "report.json").read_text())
    rr_row = combined["rows"][1]
    for k in ("ttft_s", "carbon_kg", "water_l", "cost_usd"):
        assert rr_row[k] == rr_doc["aggregates"][k]
        assert rr_row[f"{k}_norm"] == pytest.approx(
            rr_doc["aggregates"][k] / lq_doc["aggregates"][k], rel=1e-12
        )
    with pytest.raises(KeyError):
        combine_reports([d_rr], normalize_to="nearest")


def test_combine_reports_zero_base_yields_nan(tmp_path):
    d = tmp_path / "empty"
    traces = [mk_trace(0, epoch=e) for e in range(2)]
    run_simulation(CFG, "rr", seed=0, traces=traces, out_dir=d)
    combined = combine_reports([d], normalize_to="rr")
    assert math.isnan(combined["rows"][0]["cost_usd_norm"])


def test_scheduler_and_select_validation():
    with pytest.raises(ValueError):
        run_simulation(CFG, "greedy")
    with pytest.raises(ValueError):
        run_simulation(CFG, "rr", select="fastest")
    assert SCHEDULERS == ("slit", "rr", "least-queue", "nearest")


def test_epochs_and_scale_overrides():
    report = run_simulation(CFG, "rr", epochs=3)
    assert report.epochs == 3

    state = SimulatorState(CFG, "rr", scale=2.0)
    expected = generate_trace(
        CFG.infra.models,
        replace(CFG.trace_gen, request_scale=2.0),
        0,
        CFG.infra.constants.epoch_length_s,
    )
    assert state.traces == expected


def test_execute_rejects_a_stale_context():
    state = SimulatorState(CFG, "rr", seed=0)
    ctx = state.prepare()
    state.execute(ctx, ctx.labels["SLIT-Balance"], "SLIT-Balance")
    with pytest.raises(RuntimeError):
        state.execute(ctx, ctx.labels["SLIT-Balance"], "SLIT-Balance")


def test_config_hash_tracks_content():
    assert config_hash(CFG) == config_hash(build_tiny())
    changed = build_tiny(lambda d: d["datacenters"][0].update(cop=3.5))
    assert config_hash(changed) != config_hash(CFG)

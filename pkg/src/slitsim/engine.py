"""End-to-end simulation: predict, search, select, execute, account, repeat.

The per-epoch state machine lives in SimulatorState so that batch runs and
the interactive HTTP mode share one code path: an interactive operator who
always picks the same label reproduces the batch report byte for byte.
Outputs per run: report.json, per_epoch.csv (one row per datacenter-epoch),
archive_XXXXX.json snapshots of each epoch's Pareto front, and manifest.json
binding the run to its config hash and seed.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from . import __version__
from .baselines import BASELINE_KINDS, baseline_plan
from .infrastructure import Infrastructure, SimConfig, config_to_dict
from .optimizer import (
    SELECTION_LABELS,
    PredictedWorkload,
    run_epoch,
    select_solutions,
)
from .pareto import ArchiveEntry, ParetoArchive
from .perf import CarryState, fresh_carry
from .plans import materialize_assignment
from .surrogate import featurize
from .sustainability import DcEpochRow, ObjectiveVector, evaluate_plan, execute_assignment
from .workload import (
    ArrivalPredictor,
    Bucket,
    EpochTrace,
    InsufficientHistoryError,
    bucket_counts,
    generate_trace,
    predict_next_epoch,
    predictor_update,
    synthesize_epoch,
)

__all__ = [
    "SCHEDULERS",
    "EpochContext",
    "EpochRecord",
    "RunReport",
    "SimulatorState",
    "run_simulation",
    "write_run_outputs",
    "combine_reports",
    "config_hash",
]

SCHEDULERS = ("slit",) + BASELINE_KINDS


@dataclass(frozen=True)
class EpochContext:
    """One epoch's decision point: the forecast and the plans on offer."""

    epoch: int
    prediction: PredictedWorkload
    archive: ParetoArchive
    labels: Mapping[str, ArchiveEntry]
    pending_requests: int  # queued from earlier epochs, executed alongside


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    selected_label: str
    plan_id: str
    planned: ObjectiveVector
    realized: ObjectiveVector
    observed_requests: int
    queued_requests: int
    fallback_requests: int
    saturated_requests: int
    ttft_samples: int
    rows: tuple[DcEpochRow, ...] = field(repr=False)


@dataclass
class RunReport:
    label: str
    scheduler: str
    select: str
    seed: int
    scale: float
    records: list[EpochRecord] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.records)

    def aggregates(self) -> dict[str, float]:
        """Run totals; TTFT is the sample-weighted mean of epoch statistics."""
        carbon = sum(r.realized.carbon_kg for r in self.records)
        water = sum(r.realized.water_l for r in self.records)
        cost = sum(r.realized.cost_usd for r in self.records)
        samples = sum(r.ttft_samples for r in self.records)
        ttft = (
            sum(r.realized.ttft_s * r.ttft_samples for r in self.records) / samples
            if samples
            else 0.0
        )
        return {"ttft_s": ttft, "carbon_kg": carbon, "water_l": water, "cost_usd": cost}

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "scheduler": self.scheduler,
            "select": self.select,
            "seed": self.seed,
            "scale": self.scale,
            "epochs": self.epochs,
            "aggregates": self.aggregates(),
            "records": [
                {
                    "epoch": r.epoch,
                    "selected_label": r.selected_label,
                    "plan_id": r.plan_id,
                    "planned": r.planned.to_dict(),
                    "realized": r.realized.to_dict(),
                    "observed_requests": r.observed_requests,
                    "queued_requests": r.queued_requests,
                    "fallback_requests": r.fallback_requests,
                    "saturated_requests": r.saturated_requests,
                    "ttft_samples": r.ttft_samples,
                }
                for r in self.records
            ],
        }


def config_hash(cfg: SimConfig) -> str:
    doc = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode()).hexdigest()


def _grid_counts(cfg: SimConfig, trace: EpochTrace) -> dict[Bucket, int]:
    """Observed counts over the full (region, model) grid, zeros included."""
    counts = bucket_counts(trace.requests)
    grid = {}
    for region in sorted(cfg.trace_gen.region_mix):
        for model_id in sorted(cfg.trace_gen.model_shares):
            b = (region, model_id)
            grid[b] = counts.get(b, 0)
    for b, c in counts.items():
        grid[b] = c  # queued buckets outside the mix still count
    return grid


class SimulatorState:
    """Mutable run state advancing one epoch at a time.

    ``prepare`` computes the forecast and the candidate plan(s) for the
    current epoch; ``execute`` commits one of them, runs the observed
    requests, accounts the epoch and advances. Baseline schedulers surface a
    single-entry archive so both paths share the selection plumbing.
    """

    def __init__(
        self,
        cfg: SimConfig,
        scheduler: str,
        seed: int = 0,
        epochs: int | None = None,
        scale: float = 1.0,
        traces: list[EpochTrace] | None = None,
    ):
        if scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {scheduler!r}; expected one of {SCHEDULERS}")
        gen = cfg.trace_gen
        if scale != 1.0:
            gen = replace(gen, request_scale=gen.request_scale * scale)
        if epochs is not None:
            gen = replace(gen, epochs=epochs)
        self.cfg = replace(cfg, trace_gen=gen)
        self.scheduler = scheduler
        self.seed = seed
        self.scale = scale
        epoch_length = cfg.infra.constants.epoch_length_s
        self.traces = (
            traces
            if traces is not None
            else generate_trace(cfg.infra.models, gen, seed, epoch_length)
        )
        self.predictor = ArrivalPredictor(config=cfg.predictor)
        self.carry: CarryState = fresh_carry(cfg.infra)
        self.queued: list = []
        self.records: list[EpochRecord] = []
        self.epoch = 0
        self._nearest = {r: cfg.infra.nearest_location(r) for r in cfg.infra.regions}
        self._optimizer_seed = (cfg.optimizer.seed ^ (seed * 0x9E3779B1)) & 0x7FFFFFFF

    @property
    def done(self) -> bool:
        return self.epoch >= len(self.traces)

    def prepare(self) -> EpochContext | None:
        """Forecast the epoch and produce its candidate plans. Idempotent."""
        if self.done:
            return None
        cfg = self.cfg
        infra = cfg.infra
        e = self.epoch
        observed = self.traces[e]

        if e < cfg.predictor.warmup_epochs:
            predicted_counts = _grid_counts(cfg, observed)
        else:
            try:
                predicted_counts = dict(predict_next_epoch(self.predictor))
            except InsufficientHistoryError:
                predicted_counts = _grid_counts(cfg, observed)
        ptrace = synthesize_epoch(
            predicted_counts, cfg.trace_gen, e, self.seed, infra.constants.epoch_length_s
        )
        prediction = PredictedWorkload(counts=predicted_counts, trace=ptrace)

        if self.scheduler == "slit":
            params = replace(cfg.optimizer, seed=self._optimizer_seed)
            archive = run_epoch(prediction, infra, self.carry, params)
        else:
            plan = baseline_plan(self.scheduler, predicted_counts, infra, self.carry)
            planned = evaluate_plan(plan, ptrace, infra, self.carry, seed=self.seed).objectives
            archive = ParetoArchive(capacity=1)
            archive.add(ArchiveEntry(plan=plan, objectives=planned, features=featurize(plan, predicted_counts)))
        labels = select_solutions(archive)
        return EpochContext(
            epoch=e,
            prediction=prediction,
            archive=archive,
            labels=labels,
            pending_requests=len(self.queued),
        )

    def execute(self, ctx: EpochContext, entry: ArchiveEntry, label: str) -> EpochRecord:
        """Commit a plan, run the epoch on the observed arrivals, advance."""
        if ctx.epoch != self.epoch:
            raise RuntimeError(f"context is for epoch {ctx.epoch}, simulator is at {self.epoch}")
        cfg = self.cfg
        infra = cfg.infra
        observed = self.traces[self.epoch]
        requests = tuple(self.queued) + observed.requests
        exec_trace = EpochTrace(self.epoch, requests, observed.epoch_length_s)

        assignment = materialize_assignment(
            entry.plan,
            exec_trace,
            self.seed,
            planned_counts=ctx.prediction.counts,
            fallback_location=self._nearest,
        )
        result = execute_assignment(assignment, exec_trace, infra, self.carry)

        by_id = {r.request_id: r for r in requests}
        self.queued = [
            dataclasses.replace(by_id[rid], arrival_epoch=self.epoch + 1)
            for rid in result.saturated
        ]
        self.carry = result.carry_out
        self.predictor = predictor_update(self.predictor, _grid_counts(cfg, observed))

        record = EpochRecord(
            epoch=self.epoch,
            selected_label=label,
            plan_id=entry.plan_id,
            planned=entry.objectives,
            realized=result.objectives,
            observed_requests=len(observed.requests),
            queued_requests=ctx.pending_requests,
            fallback_requests=_fallback_count(assignment, exec_trace, ctx.prediction.counts),
            saturated_requests=len(result.saturated),
            ttft_samples=len(result.outcomes) + len(result.saturated),
            rows=result.rows,
        )
        self.records.append(record)
        self.epoch += 1
        return record


def _fallback_count(
    assignment: Mapping[str, str], trace: EpochTrace, predicted: Mapping[Bucket, int]
) -> int:
    seen: dict[Bucket, int] = {}
    n = 0
    for r in trace.requests:
        seen[r.bucket] = seen.get(r.bucket, 0) + 1
        if seen[r.bucket] > max(predicted.get(r.bucket, 0), 0):
            n += 1
    return n


def run_simulation(
    cfg: SimConfig,
    scheduler: str,
    select: str = "balance",
    seed: int = 0,
    epochs: int | None = None,
    scale: float = 1.0,
    out_dir: str | Path | None = None,
    traces: list[EpochTrace] | None = None,
) -> RunReport:
    """Run every epoch non-interactively under one selection policy.

    ``select`` names the archive point committed each epoch (ttft, carbon,
    water, cost or balance); baselines ignore it in effect since their
    archive holds a single plan. Deterministic for fixed (config, seed).
    """
    if select not in SELECTION_LABELS:
        raise ValueError(f"unknown selection policy {select!r}; expected one of {sorted(SELECTION_LABELS)}")
    state = SimulatorState(cfg, scheduler, seed=seed, epochs=epochs, scale=scale, traces=traces)
    label = SELECTION_LABELS[select]
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    while True:
        ctx = state.prepare()
        if ctx is None:
            break
        if out_path is not None and scheduler == "slit":
            _write_archive(out_path / f"archive_{ctx.epoch:05d}.json", ctx)
        state.execute(ctx, ctx.labels[label], label)

    report = RunReport(
        label=f"slit-{select}" if scheduler == "slit" else scheduler,
        scheduler=scheduler,
        select=select,
        seed=seed,
        scale=scale,
        records=state.records,
    )
    if out_path is not None:
        write_run_outputs(report, cfg, out_path)
    return report


def _write_archive(path: Path, ctx: EpochContext) -> None:
    label_by_id: dict[str, list[str]] = {}
    for label, entry in ctx.labels.items():
        label_by_id.setdefault(entry.plan_id, []).append(label)
    doc = {
        "epoch": ctx.epoch,
        "entries": [
            {
                "plan_id": e.plan_id,
                "plan": e.plan.to_dict(),
                "objectives": e.objectives.to_dict(),
                "labels": sorted(label_by_id.get(e.plan_id, [])),
            }
            for e in ctx.archive.entries
        ],
    }
    path.write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


CSV_COLUMNS = [
    "epoch",
    "location",
    "it_kwh",
    "crac_kwh",
    "cooling_kwh",
    "support_kwh",
    "total_kwh",
    "cost_usd",
    "w_evap_l",
    "w_blow_l",
    "w_grid_l",
    "c_grid_kg",
    "c_water_kg",
    "ttft_mean_s",
]


def write_run_outputs(report: RunReport, cfg: SimConfig, out_dir: str | Path) -> None:
    """Write report.json, per_epoch.csv and manifest.json for a finished run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with (out / "per_epoch.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for record in report.records:
            for row in record.rows:
                writer.writerow(
                    [
                        row.epoch,
                        row.location_id,
                        f"{row.energy.it_kwh:.9g}",
                        f"{row.energy.crac_kwh:.9g}",
                        f"{row.energy.cooling_kwh:.9g}",
                        f"{row.energy.support_kwh:.9g}",
                        f"{row.energy.total_kwh:.9g}",
                        f"{row.cost_usd:.9g}",
                        f"{row.water.evaporated_l:.9g}",
                        f"{row.water.blowdown_l:.9g}",
                        f"{row.water.grid_l:.9g}",
                        f"{row.carbon.grid_kg:.9g}",
                        f"{row.carbon.water_kg:.9g}",
                        f"{row.ttft_mean_s:.9g}",
                    ]
                )
    manifest = {
        "config_sha256": config_hash(cfg),
        "defaults_applied": list(cfg.defaults_applied),
        "label": report.label,
        "scheduler": report.scheduler,
        "select": report.select,
        "seed": report.seed,
        "scale": report.scale,
        "epochs": report.epochs,
        "version": __version__,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def combine_reports(
    run_dirs: list[str | Path], normalize_to: str
) -> dict:
    """Merge finished runs and normalize each metric to a baseline run.

    ``normalize_to`` names the label of the reference run (for example
    ``least-queue``); every aggregate is divided by that run's value.
    """
    reports = []
    for d in run_dirs:
        doc = json.loads((Path(d) / "report.json").read_text(encoding="utf-8"))
        reports.append(doc)
    by_label = {r["label"]: r for r in reports}
    if normalize_to not in by_label:
        raise KeyError(
            f"no run labeled {normalize_to!r} among {sorted(by_label)}; cannot normalize"
        )
    base = by_label[normalize_to]["aggregates"]
    rows = []
    for r in reports:
        agg = r["aggregates"]
        rows.append(
            {
                "label": r["label"],
                **{k: agg[k] for k in ("ttft_s", "carbon_kg", "water_l", "cost_usd")},
                **{
                    f"{k}_norm": (agg[k] / base[k]) if base[k] else float("nan")
                    for k in ("ttft_s", "carbon_kg", "water_l", "cost_usd")
                },
            }
        )
    rows.sort(key=lambda row: row["label"])
    return {"normalize_to": normalize_to, "rows": rows}

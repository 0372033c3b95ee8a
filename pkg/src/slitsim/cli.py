"""Command line entry points.

simulate   run one scheduler over a full trace and write run outputs
serve      expose one interactive run over the local HTTP API
gen-trace  write the synthetic request trace for a config to NDJSON
report     merge finished runs and normalize against a baseline run
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .engine import SCHEDULERS, combine_reports, run_simulation
from .infrastructure import ConfigError, load_config
from .optimizer import SELECTION_LABELS
from .server import ConsoleServer
from .workload import generate_trace, read_trace_ndjson, write_trace_ndjson

log = logging.getLogger(__name__)


def _add_common_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="simulator config JSON")
    p.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    p.add_argument("--epochs", type=int, default=None, help="override the config's epoch count")
    p.add_argument("--scale", type=float, default=1.0, help="request volume multiplier (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slitsim",
        description="Epoch simulator and multi-objective scheduler for geo-distributed LLM serving.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scheduler end to end")
    _add_common_run_args(sim)
    sim.add_argument("--scheduler", choices=SCHEDULERS, default="slit")
    sim.add_argument(
        "--select",
        choices=sorted(SELECTION_LABELS),
        default="balance",
        help="which archive point to commit each epoch (slit only; default balance)",
    )
    sim.add_argument("--out", required=True, help="output directory for the run")
    sim.add_argument("--trace", default=None, help="replay a recorded NDJSON trace instead of generating one")

    srv = sub.add_parser("serve", help="interactive epoch-by-epoch run over HTTP")
    _add_common_run_args(srv)
    srv.add_argument("--port", type=int, default=8080, help="listen port (0 = ephemeral)")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--scheduler", choices=SCHEDULERS, default="slit")
    srv.add_argument(
        "--auto-select-after",
        type=float,
        default=None,
        metavar="SECS",
        help="commit the balance point when an epoch sits unselected this long",
    )

    gen = sub.add_parser("gen-trace", help="write the config's synthetic trace to NDJSON")
    _add_common_run_args(gen)
    gen.add_argument("--out", required=True, help="output path (.gz compresses)")

    rep = sub.add_parser("report", help="merge runs and normalize to a baseline")
    rep.add_argument("--runs", required=True, help="directory holding one subdirectory per run")
    rep.add_argument("--normalize-to", default="least-queue", help="label of the reference run")
    rep.add_argument("--out", choices=("csv", "json"), default="csv", help="output format (stdout)")

    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    traces = None
    if args.trace:
        epoch_length = cfg.infra.constants.epoch_length_s
        traces = read_trace_ndjson(args.trace, epoch_length, epochs=args.epochs)
    report = run_simulation(
        cfg,
        scheduler=args.scheduler,
        select=args.select,
        seed=args.seed,
        epochs=args.epochs,
        scale=args.scale,
        out_dir=args.out,
        traces=traces,
    )
    agg = report.aggregates()
    log.info(
        "%s: %d epochs, ttft %.3fs, carbon %.1fkg, water %.0fL, cost $%.2f -> %s",
        report.label, report.epochs, agg["ttft_s"], agg["carbon_kg"],
        agg["water_l"], agg["cost_usd"], args.out,
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    server = ConsoleServer(
        cfg,
        scheduler=args.scheduler,
        seed=args.seed,
        epochs=args.epochs,
        scale=args.scale,
        auto_select_after=args.auto_select_after,
        host=args.host,
        port=args.port,
    )
    server.start()
    print(f"listening on http://{args.host}:{server.port}", flush=True)
    server.serve_forever()
    return 0


def _cmd_gen_trace(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    gen = cfg.trace_gen
    if args.epochs is not None:
        from dataclasses import replace

        gen = replace(gen, epochs=args.epochs)
    if args.scale != 1.0:
        from dataclasses import replace

        gen = replace(gen, request_scale=gen.request_scale * args.scale)
    traces = generate_trace(cfg.infra.models, gen, args.seed, cfg.infra.constants.epoch_length_s)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_trace_ndjson(traces, args.out)
    n = sum(len(t.requests) for t in traces)
    log.info("wrote %d requests over %d epochs to %s", n, len(traces), args.out)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    runs_dir = Path(args.runs)
    run_dirs = sorted(d for d in runs_dir.iterdir() if (d / "report.json").is_file())
    if not run_dirs:
        log.error("no run directories with report.json under %s", runs_dir)
        return 1
    doc = combine_reports(run_dirs, normalize_to=args.normalize_to)
    if args.out == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
        return 0
    buf = io.StringIO()
    fields = [
        "label",
        "ttft_s", "carbon_kg", "water_l", "cost_usd",
        "ttft_s_norm", "carbon_kg_norm", "water_l_norm", "cost_usd_norm",
    ]
    writer = csv.DictWriter(buf, fieldnames=fields)
    writer.writeheader()
    for row in doc["rows"]:
        writer.writerow({k: row[k] for k in fields})
    sys.stdout.write(buf.getvalue())
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "gen-trace":
            return _cmd_gen_trace(args)
        if args.command == "report":
            return _cmd_report(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except (FileNotFoundError, KeyError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())

"""Record a live console session into tests/fixtures/session.json.

Starts the serve-mode API in-process on the bundled 3-site demo config and
drives it through the request sequence the console issues, storing every
(request, response) pair verbatim. Two recordings are made: a main session
committing three epochs (including one 409 step-without-selection and one
404 unknown-plan select), and a one-epoch session run to completion so the
done/empty-front payloads and the run-complete errors are on file too.

Run from the frontend/ directory: python3 scripts/record_session.py
"""

import json
import sys
import urllib.error
import urllib.request
from pathlib import Path

from slitsim import ConsoleServer, parse_config

HERE = Path(__file__).resolve().parent
OUT = HERE.parent / "tests" / "fixtures" / "session.json"
CONFIG = HERE.parent.parent / "demos" / "triad.json"

SLIT_LABELS = {"SLIT-TTFT", "SLIT-Carbon", "SLIT-Water", "SLIT-Cost", "SLIT-Balance"}


class Recorder:
    def __init__(self, base: str):
        self.base = base
        self.exchanges: list[dict] = []

    def call(self, method: str, path: str, body: dict | None = None, expect: int = 200) -> dict:
        data = None if body is None else json.dumps(body).encode()
        req = urllib.request.Request(self.base + path, data=data, method=method)
        if data is not None:
            req.add_header("Content-Type", "application/json")
        try:
            with urllib.request.urlopen(req) as res:
                status, doc = res.status, json.loads(res.read())
        except urllib.error.HTTPError as err:
            status, doc = err.code, json.loads(err.read())
        if status != expect:
            raise SystemExit(f"{method} {path}: expected {expect}, got {status}: {doc}")
        ex = {"method": method, "path": path, "status": status, "response": doc}
        if body is not None:
            ex["request_body"] = body
        self.exchanges.append(ex)
        return doc


def balance_id(pareto: dict) -> str:
    for entry in pareto["entries"]:
        if "SLIT-Balance" in entry["labels"]:
            return entry["plan_id"]
    raise SystemExit("no SLIT-Balance entry on the front")


def min_carbon_id(pareto: dict) -> str:
    return min(pareto["entries"], key=lambda e: e["objectives"]["carbon_kg"])["plan_id"]


def check_front(pareto: dict, epoch: int) -> None:
    assert pareto["epoch"] == epoch, (pareto["epoch"], epoch)
    labels = {lb for e in pareto["entries"] for lb in e["labels"]}
    assert labels == SLIT_LABELS, f"epoch {epoch} front labels {labels}"


def record_main(cfg) -> list[dict]:
    srv = ConsoleServer(cfg, scheduler="slit", seed=7)
    srv.start()
    rec = Recorder(f"http://127.0.0.1:{srv.port}")
    try:
        rec.call("GET", "/config")
        rec.call("GET", "/state")
        front = rec.call("GET", "/pareto")
        check_front(front, 0)
        rec.call("GET", "/report")
        rec.call("POST", "/step", expect=409)
        rec.call("POST", "/select", {"plan_id": "not-a-plan"}, expect=404)
        picks = [balance_id(front)]
        for epoch in range(3):
            rec.call("POST", "/select", {"plan_id": picks[-1]})
            rec.call("POST", "/step")
            rec.call("GET", "/state")
            front = rec.call("GET", "/pareto")
            check_front(front, epoch + 1)
            report = rec.call("GET", "/report")
            picks.append(min_carbon_id(front) if epoch == 0 else balance_id(front))
        diverged = any(r["planned"] != r["realized"] for r in report["records"])
        assert diverged, "no planned/realized divergence in the recorded session"
    finally:
        srv.stop()
    return rec.exchanges


def record_completed(cfg) -> list[dict]:
    srv = ConsoleServer(cfg, scheduler="slit", seed=7, epochs=1)
    srv.start()
    rec = Recorder(f"http://127.0.0.1:{srv.port}")
    try:
        rec.call("GET", "/state")
        front = rec.call("GET", "/pareto")
        check_front(front, 0)
        rec.call("GET", "/report")
        bal = balance_id(front)
        rec.call("POST", "/select", {"plan_id": bal})
        step = rec.call("POST", "/step")
        assert step["done"], "one-epoch run should finish on the first step"
        rec.call("GET", "/state")
        done_front = rec.call("GET", "/pareto")
        assert done_front["done"] and done_front["entries"] == []
        rec.call("GET", "/report")
        rec.call("POST", "/select", {"plan_id": bal}, expect=409)
        rec.call("POST", "/step", expect=409)
    finally:
        srv.stop()
    return rec.exchanges


def main() -> None:
    cfg = parse_config(json.loads(CONFIG.read_text()))
    session = record_main(cfg)
    completed = record_completed(cfg)
    doc = {
        "recorded": {
            "config": "demos/triad.json",
            "scheduler": "slit",
            "seed": 7,
            "note": "live serve-mode responses; do not edit by hand, re-run scripts/record_session.py",
        },
        "session": session,
        "completed": completed,
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(doc, indent=1) + "\n")
    print(f"wrote {OUT} ({len(session)} + {len(completed)} exchanges)")


if __name__ == "__main__":
    main()

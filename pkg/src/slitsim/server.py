"""Interactive HTTP mode: one simulation stepped epoch by epoch by an operator.

Stdlib http.server only. The server wraps one SimulatorState behind a lock;
GET /state, /pareto, /report and /config read it, POST /select picks a plan
off the current epoch's front by plan_id and POST /step commits the selection
and advances. Stepping without a selection is a 409 unless the configured
auto-select deadline has passed, in which case the balance point is taken.
All responses carry permissive CORS headers so a local console page can call
the API directly from the browser.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from .engine import EpochContext, RunReport, SimulatorState
from .infrastructure import SimConfig, config_to_dict
from .optimizer import SELECTION_LABELS
from .pareto import ArchiveEntry

__all__ = ["ConsoleServer"]

log = logging.getLogger(__name__)

_BALANCE = SELECTION_LABELS["balance"]


class ConsoleServer:
    """Own one simulation run and serve its control API.

    ``auto_select_after`` (seconds, optional) arms a per-epoch deadline: once
    it elapses with no operator choice, /step proceeds with the balance point
    instead of returning 409. ``port=0`` binds an ephemeral port; read the
    bound one from ``.port`` after ``start()``.
    """

    def __init__(
        self,
        cfg: SimConfig,
        scheduler: str = "slit",
        seed: int = 0,
        epochs: int | None = None,
        scale: float = 1.0,
        auto_select_after: float | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
    ):
        if auto_select_after is not None and auto_select_after < 0:
            raise ValueError("auto_select_after must be >= 0")
        self.cfg = cfg
        self.auto_select_after = auto_select_after
        self._state = SimulatorState(cfg, scheduler, seed=seed, epochs=epochs, scale=scale)
        self._lock = threading.Lock()
        self._ctx: EpochContext | None = None
        self._ctx_time = 0.0
        self._selection: tuple[ArchiveEntry, str] | None = None
        self._config_doc = config_to_dict(cfg)
        self._host = host
        self._requested_port = port
        self._httpd: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # --- lifecycle -------------------------------------------------------

    def start(self) -> None:
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((self._host, self._requested_port), handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        log.info("console API listening on %s:%d", self._host, self.port)

    def stop(self) -> None:
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None

    @property
    def port(self) -> int:
        if self._httpd is None:
            raise RuntimeError("server is not running")
        return self._httpd.server_address[1]

    def serve_forever(self) -> None:
        """Block the calling thread until the process is interrupted."""
        if self._thread is None:
            self.start()
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            self.stop()

    # --- request handlers (all return (status, body dict)) ----------------

    def handle(self, method: str, path: str, body: dict | None) -> tuple[int, dict]:
        with self._lock:
            if method == "GET" and path == "/state":
                return 200, self._state_doc()
            if method == "GET" and path == "/pareto":
                return 200, self._pareto_doc()
            if method == "GET" and path == "/report":
                return 200, self._report_doc()
            if method == "GET" and path == "/config":
                return 200, self._config_doc
            if method == "POST" and path == "/select":
                return self._do_select(body or {})
            if method == "POST" and path == "/step":
                return self._do_step()
        return 404, {"error": f"no such endpoint: {method} {path}"}

    def _ensure_ctx(self) -> EpochContext | None:
        if self._ctx is None and not self._state.done:
            self._ctx = self._state.prepare()
            self._ctx_time = time.monotonic()
            self._selection = None
        return self._ctx

    def _auto_deadline_passed(self) -> bool:
        return (
            self.auto_select_after is not None
            and time.monotonic() - self._ctx_time >= self.auto_select_after
        )

    def _state_doc(self) -> dict[str, Any]:
        ctx = self._ensure_ctx()
        st = self._state
        last = st.records[-1] if st.records else None
        sel_entry, sel_label = self._selection if self._selection else (None, None)
        return {
            "scheduler": st.scheduler,
            "seed": st.seed,
            "epoch": st.epoch,
            "total_epochs": len(st.traces),
            "done": st.done,
            "prepared": ctx is not None,
            "pending_requests": ctx.pending_requests if ctx else 0,
            "selected_plan_id": sel_entry.plan_id if sel_entry else None,
            "selected_label": sel_label,
            "auto_select_after_s": self.auto_select_after,
            "auto_select_armed": ctx is not None and self.auto_select_after is not None,
            "epochs_recorded": len(st.records),
            "last_record": _record_doc(last) if last else None,
        }

    def _pareto_doc(self) -> dict[str, Any]:
        ctx = self._ensure_ctx()
        if ctx is None:
            return {"epoch": self._state.epoch, "done": True, "entries": [], "labels": {}}
        label_by_id: dict[str, list[str]] = {}
        for label, entry in ctx.labels.items():
            label_by_id.setdefault(entry.plan_id, []).append(label)
        sel_entry = self._selection[0] if self._selection else None
        return {
            "epoch": ctx.epoch,
            "done": False,
            "predicted_requests": int(sum(ctx.prediction.counts.values())),
            "pending_requests": ctx.pending_requests,
            "selected_plan_id": sel_entry.plan_id if sel_entry else None,
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

    def _report_doc(self) -> dict[str, Any]:
        st = self._state
        report = RunReport(
            label=st.scheduler,
            scheduler=st.scheduler,
            select="interactive",
            seed=st.seed,
            scale=st.scale,
            records=list(st.records),
        )
        return report.to_dict()

    def _do_select(self, body: dict) -> tuple[int, dict]:
        plan_id = body.get("plan_id")
        if not isinstance(plan_id, str) or not plan_id:
            return 400, {"error": "body must be a JSON object with a plan_id string"}
        ctx = self._ensure_ctx()
        if ctx is None:
            return 409, {"error": "run complete; nothing to select"}
        for entry in ctx.archive.entries:
            if entry.plan_id == plan_id:
                label = next(
                    (lb for lb, e in sorted(ctx.labels.items()) if e.plan_id == plan_id),
                    "operator",
                )
                self._selection = (entry, label)
                return 200, {"selected_plan_id": plan_id, "label": label, "epoch": ctx.epoch}
        return 404, {"error": f"plan_id {plan_id!r} is not on epoch {ctx.epoch}'s front"}

    def _do_step(self) -> tuple[int, dict]:
        ctx = self._ensure_ctx()
        if ctx is None:
            return 409, {"error": "run complete"}
        if self._selection is None:
            if self._auto_deadline_passed():
                self._selection = (ctx.labels[_BALANCE], _BALANCE)
            else:
                return 409, {"error": "no plan selected for this epoch"}
        entry, label = self._selection
        record = self._state.execute(ctx, entry, label)
        self._ctx = None
        self._selection = None
        return 200, {"record": _record_doc(record), "done": self._state.done}


def _record_doc(record) -> dict[str, Any]:
    return {
        "epoch": record.epoch,
        "selected_label": record.selected_label,
        "plan_id": record.plan_id,
        "planned": record.planned.to_dict(),
        "realized": record.realized.to_dict(),
        "observed_requests": record.observed_requests,
        "queued_requests": record.queued_requests,
        "fallback_requests": record.fallback_requests,
        "saturated_requests": record.saturated_requests,
        "ttft_samples": record.ttft_samples,
    }


def _make_handler(console: ConsoleServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt: str, *args) -> None:
            log.debug("%s %s", self.address_string(), fmt % args)

        def _respond(self, status: int, doc: dict) -> None:
            payload = json.dumps(doc).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self._cors()
            self.end_headers()
            self.wfile.write(payload)

        def _cors(self) -> None:
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")

        def do_OPTIONS(self) -> None:  # noqa: N802 (http.server naming)
            self.send_response(204)
            self._cors()
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self) -> None:  # noqa: N802
            try:
                status, doc = console.handle("GET", self.path.split("?", 1)[0], None)
            except Exception as exc:  # surface, don't kill the worker thread
                log.exception("GET %s failed", self.path)
                status, doc = 500, {"error": str(exc)}
            self._respond(status, doc)

        def do_POST(self) -> None:  # noqa: N802
            try:
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length) if length else b""
                body = None
                if raw:
                    try:
                        body = json.loads(raw)
                    except json.JSONDecodeError:
                        self._respond(400, {"error": "request body is not valid JSON"})
                        return
                if body is not None and not isinstance(body, dict):
                    self._respond(400, {"error": "request body must be a JSON object"})
                    return
                status, doc = console.handle("POST", self.path.split("?", 1)[0], body)
            except Exception as exc:
                log.exception("POST %s failed", self.path)
                status, doc = 500, {"error": str(exc)}
            self._respond(status, doc)

    return Handler

"""HTTP gateway: REST API, server-sent-event replay, token access tiers.

Endpoints (JSON bodies, `Authorization: Bearer <token>`):

    GET  /api/health
    POST /api/scenarios                     (ADMIN)
    GET  /api/scenarios/{id}
    POST /api/runs {scenario_id, seed}      (OPERATOR+)
    GET  /api/runs/{id}
    GET  /api/runs/{id}/trace?offset&limit
    GET  /api/runs/{id}/alerts
    GET  /api/stream/runs/{id}?speed=X      (SSE)
    POST /api/assessments {scenario_id, n_runs, base_seed, sweep?, per_zone?}
                                            (OPERATOR+)
    GET  /api/assessments/{id}
    GET  /api/reports/{run_id}?audience=A

Tokens come from DTSS_TOKENS ("token:ROLE,token2:ROLE") or the constructor;
roles are VIEWER < OPERATOR < ADMIN. Authorization is checked before any
handler touches the data directory.
"""

import json
import os
import re
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlparse

from dtss import __version__
from dtss.assess import AssessmentConfig, sweep_parameters
from dtss.engine import CompiledScenario
from dtss.errors import DtssError, ScenarioParseError, ScenarioValidationError
from dtss.fusion import Audience, export_report, render_report_text
from dtss.ingest import Modality
from dtss.scenario import parse_scenario
from dtss.store import DuplicateRunError, NotFoundError, RunStore, StoredRun

ROLE_RANK = {"VIEWER": 0, "OPERATOR": 1, "ADMIN": 2}


def parse_tokens(raw: str) -> dict[str, str]:
    tokens = {}
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        token, sep, role = part.partition(":")
        role = role.strip().upper()
        if not sep or role not in ROLE_RANK:
            raise ValueError(f"bad token spec {part!r}; expected token:ROLE")
        tokens[token.strip()] = role
    return tokens


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class GatewayApp:
    """Request-independent gateway state: store, auth, worker pool."""

    def __init__(self, data_dir, tokens: Optional[dict[str, str]] = None,
                 max_workers: int = 2, run_budget: int = 100_000):
        if tokens is None:
            tokens = parse_tokens(os.environ.get("DTSS_TOKENS", ""))
        self.store = RunStore(data_dir)
        self.tokens = tokens
        self.run_budget = run_budget
        self.pool = ThreadPoolExecutor(max_workers=max_workers)
        self._compiled_cache: dict[str, CompiledScenario] = {}
        self._cache_lock = threading.Lock()

    # -- auth ---------------------------------------------------------------

    def authorize(self, auth_header: Optional[str], min_role: str) -> str:
        if not self.tokens:
            raise ApiError(503, "no_tokens",
                           "no API tokens configured (set DTSS_TOKENS)")
        if not auth_header or not auth_header.startswith("Bearer "):
            raise ApiError(401, "unauthorized", "missing bearer token")
        token = auth_header[len("Bearer "):].strip()
        role = self.tokens.get(token)
        if role is None:
            raise ApiError(401, "unauthorized", "unknown token")
        if ROLE_RANK[role] < ROLE_RANK[min_role]:
            raise ApiError(403, "forbidden",
                           f"requires {min_role}, token has {role}")
        return role

    # -- scenario compilation -------------------------------------------------

    def compiled(self, scenario_id: str) -> CompiledScenario:
        with self._cache_lock:
            hit = self._compiled_cache.get(scenario_id)
        if hit is not None:
            return hit
        doc = self.store.get_scenario(scenario_id)
        spec = parse_scenario(doc)
        compiled = CompiledScenario(spec)
        with self._cache_lock:
            self._compiled_cache[scenario_id] = compiled
        return compiled

    # -- jobs -------------------------------------------------------------

    def submit_run(self, scenario_id: str, seed: int) -> dict:
        compiled = self.compiled(scenario_id)
        from dtss.engine import run_id_for
        run_id = run_id_for(compiled.spec_hash, seed)
        try:
            return self.store.get_run(run_id)  # idempotent resubmission
        except NotFoundError:
            pass
        run = StoredRun(run_id=run_id, spec_hash=compiled.spec_hash,
                        scenario_id=scenario_id, seed=seed, status="QUEUED",
                        created_at=time.time())
        self.store.register_run(run)
        self.pool.submit(self._run_job, run_id, scenario_id, seed)
        return self.store.get_run(run_id)

    def _run_job(self, run_id: str, scenario_id: str, seed: int) -> None:
        try:
            self.store.set_run_status(run_id, "RUNNING")
            trace = self.compiled(scenario_id).run(seed)
            self.store.persist_run(trace, scenario_id=scenario_id)
        except DuplicateRunError:
            pass
        except Exception as exc:  # noqa: BLE001
            self.store.set_run_status(run_id, "FAILED", error=str(exc))

    def submit_assessment(self, body: dict) -> dict:
        scenario_id = body.get("scenario_id")
        if not scenario_id:
            raise ApiError(400, "bad_request", "scenario_id is required")
        compiled = self.compiled(scenario_id)
        n_runs = int(body.get("n_runs", 100))
        base_seed = int(body.get("base_seed", 0))
        sweep = tuple((item["path"], list(item["values"]))
                      for item in body.get("sweep", []))
        per_zone = bool(body.get("per_zone", False))
        assessment_id = str(uuid.uuid4())
        request = {"scenario_id": scenario_id, "n_runs": n_runs,
                   "base_seed": base_seed,
                   "sweep": [[p, v] for p, v in sweep], "per_zone": per_zone}
        self.store.register_assessment(assessment_id, request)
        cfg = AssessmentConfig(spec=compiled.spec, n_runs=n_runs,
                               base_seed=base_seed, sweep=sweep,
                               per_zone=per_zone, budget=self.run_budget)
        self.pool.submit(self._assessment_job, assessment_id, cfg)
        return self.store.get_assessment(assessment_id)

    def _assessment_job(self, assessment_id: str, cfg: AssessmentConfig) -> None:
        try:
            self.store.set_assessment(assessment_id, "RUNNING")
            result = sweep_parameters(cfg)
            self.store.set_assessment(assessment_id, "DONE",
                                      result=result.to_dict())
        except Exception as exc:  # noqa: BLE001
            self.store.set_assessment(assessment_id, "FAILED", error=str(exc))

    def build_report(self, run_id: str, audience: Audience) -> dict:
        lines = self.store.load_trace_lines(run_id)
        alerts, events, officer_reports = _report_inputs(lines)
        report = export_report(events, alerts, audience,
                               officer_reports=officer_reports, run_id=run_id)
        report["text"] = render_report_text(report)
        return report


def _report_inputs(lines: list[str]):
    from dtss.detectors import Alert, AlertKind
    from dtss.fusion import CompositeEvent

    alerts = []
    events = []
    officer_reports = []
    for line in lines:
        obj = json.loads(line)
        if obj["type"] == "alert":
            alerts.append(Alert(
                alert_id=obj["alert_id"], kind=AlertKind(obj["kind"]),
                severity=obj["severity"], entity_ids=tuple(obj["entity_ids"]),
                t_start=obj["t_start"], t_end=obj["t_end"],
                evidence=obj.get("evidence", {})))
        elif obj["type"] == "composite":
            events.append(CompositeEvent(
                event_id=obj["event_id"], rule_id=obj["rule_id"],
                member_alert_ids=tuple(obj["member_alert_ids"]),
                t_trigger=obj["t_trigger"], zone_id=obj.get("zone_id")))
        elif (obj["type"] == "observation"
              and obj.get("modality") == Modality.OFFICER_REPORT.value):
            doc = {"timestamp_ms": obj["timestamp_ms"],
                   "source_id": obj["source_id"],
                   "text": obj["payload"].get("text", "")}
            if obj["payload"].get("reported_subject_id"):
                doc["reported_subject_id"] = obj["payload"]["reported_subject_id"]
            officer_reports.append(doc)
    return alerts, events, officer_reports


_ROUTES = [
    ("GET", re.compile(r"^/api/health$"), "health", None),
    ("POST", re.compile(r"^/api/scenarios$"), "post_scenario", "ADMIN"),
    ("GET", re.compile(r"^/api/scenarios/(?P<sid>[0-9a-f]+)$"), "get_scenario", "VIEWER"),
    ("POST", re.compile(r"^/api/runs$"), "post_run", "OPERATOR"),
    ("GET", re.compile(r"^/api/runs/(?P<rid>[0-9a-f-]+)$"), "get_run", "VIEWER"),
    ("GET", re.compile(r"^/api/runs/(?P<rid>[0-9a-f-]+)/trace$"), "get_trace", "VIEWER"),
    ("GET", re.compile(r"^/api/runs/(?P<rid>[0-9a-f-]+)/alerts$"), "get_alerts", "VIEWER"),
    ("GET", re.compile(r"^/api/stream/runs/(?P<rid>[0-9a-f-]+)$"), "stream_run", "VIEWER"),
    ("POST", re.compile(r"^/api/assessments$"), "post_assessment", "OPERATOR"),
    ("GET", re.compile(r"^/api/assessments/(?P<aid>[0-9a-f-]+)$"), "get_assessment", "VIEWER"),
    ("GET", re.compile(r"^/api/reports/(?P<rid>[0-9a-f-]+)$"), "get_report", "VIEWER"),
]


class GatewayHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    app: GatewayApp = None  # assigned by serve_api

    def log_message(self, fmt, *args):  # quiet by default
        pass

    # -- plumbing ---------------------------------------------------------

    def _send_json(self, status: int, doc: dict) -> None:
        blob = json.dumps(doc, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(blob)

    def _send_error(self, err: ApiError) -> None:
        self._send_json(err.status, {"error": {"code": err.code,
                                               "message": err.message}})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ApiError(400, "bad_json", f"request body is not JSON: {exc}")
        if not isinstance(doc, dict):
            raise ApiError(400, "bad_json", "request body must be a JSON object")
        return doc

    def _dispatch(self, method: str) -> None:
        parsed = urlparse(self.path)
        query = {k: v[-1] for k, v in parse_qs(parsed.query).items()}
        for route_method, pattern, name, min_role in _ROUTES:
            if route_method != method:
                continue
            m = pattern.match(parsed.path)
            if not m:
                continue
            try:
                if min_role is not None:
                    self.app.authorize(self.headers.get("Authorization"), min_role)
                getattr(self, name)(query, **m.groupdict())
            except ApiError as err:
                self._send_error(err)
            except NotFoundError as exc:
                self._send_error(ApiError(404, "not_found", str(exc)))
            except (ScenarioParseError, ScenarioValidationError) as exc:
                self._send_error(ApiError(400, "invalid_scenario", str(exc)))
            except DtssError as exc:
                self._send_error(ApiError(400, "domain_error", str(exc)))
            except BrokenPipeError:
                pass
            except Exception as exc:  # noqa: BLE001
                self._send_error(ApiError(500, "internal", str(exc)))
            return
        self._send_error(ApiError(404, "not_found", f"no route for {parsed.path}"))

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    # -- handlers --------------------------------------------------------

    def health(self, query):
        self._send_json(200, {"status": "ok", "version": __version__})

    def post_scenario(self, query):
        doc = self._body()
        parse_scenario(doc)  # full validation before it can be stored
        scenario_id = self.app.store.put_scenario(doc)
        self._send_json(201, {"scenario_id": scenario_id})

    def get_scenario(self, query, sid):
        self._send_json(200, self.app.store.get_scenario(sid))

    def post_run(self, query):
        body = self._body()
        if "scenario_id" not in body or "seed" not in body:
            raise ApiError(400, "bad_request", "scenario_id and seed are required")
        doc = self.app.submit_run(str(body["scenario_id"]), int(body["seed"]))
        self._send_json(202, doc)

    def get_run(self, query, rid):
        self._send_json(200, self.app.store.get_run(rid))

    def get_trace(self, query, rid):
        lines = self.app.store.load_trace_lines(rid)
        offset = max(0, int(query.get("offset", 0)))
        limit = int(query.get("limit", len(lines)))
        window = lines[offset:offset + limit] if limit >= 0 else lines[offset:]
        self._send_json(200, {
            "run_id": rid, "offset": offset, "total": len(lines),
            "records": [json.loads(line) for line in window]})

    def get_alerts(self, query, rid):
        lines = self.app.store.load_trace_lines(rid)
        alerts = [json.loads(line) for line in lines
                  if json.loads(line).get("type") == "alert"]
        self._send_json(200, {"run_id": rid, "alerts": alerts})

    def get_report(self, query, rid):
        raw = query.get("audience", "LOCAL").upper()
        try:
            audience = Audience(raw)
        except ValueError:
            raise ApiError(400, "bad_request", f"unknown audience {raw!r}") from None
        self._send_json(200, self.app.build_report(rid, audience))

    def post_assessment(self, query):
        self._send_json(202, self.app.submit_assessment(self._body()))

    def get_assessment(self, query, aid):
        self._send_json(200, self.app.store.get_assessment(aid))

    def stream_run(self, query, rid):
        """Replay a run's trace as server-sent events.

        speed > 0 paces events by trace-time deltas / speed; speed 0 (or
        omitted) streams as fast as possible. Waits for QUEUED/RUNNING
        runs to finish before replaying.
        """
        speed = float(query.get("speed", 0))
        deadline = time.time() + 120.0
        while True:
            run = self.app.store.get_run(rid)
            if run["status"] == "DONE":
                break
            if run["status"] == "FAILED":
                raise ApiError(409, "run_failed", run.get("error", "run failed"))
            if time.time() > deadline:
                raise ApiError(504, "timeout", "run did not finish in time")
            time.sleep(0.05)
        lines = self.app.store.load_trace_lines(rid)
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Connection", "close")
        self.end_headers()
        self.close_connection = True
        prev_t = None
        try:
            for line in lines:
                obj = json.loads(line)
                etype = obj.get("type", "message")
                if etype == "outcome":
                    continue
                t = _entry_time(obj)
                if speed > 0 and prev_t is not None and t is not None \
                        and t > prev_t:
                    time.sleep(min((t - prev_t) / 1000.0 / speed, 30.0))
                if t is not None:
                    prev_t = t
                self.wfile.write(
                    f"event: {etype}\ndata: {line}\n\n".encode("utf-8"))
                self.wfile.flush()
            outcome = [json.loads(l) for l in lines
                       if json.loads(l).get("type") == "outcome"]
            done = outcome[-1] if outcome else {}
            self.wfile.write(
                f"event: done\ndata: {json.dumps(done, sort_keys=True)}\n\n"
                .encode("utf-8"))
            self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass


def _entry_time(obj: dict) -> Optional[int]:
    for key in ("timestamp_ms", "t_end", "t_trigger", "t"):
        if key in obj:
            return obj[key]
    return None


def serve_api(bind_address: str, data_dir,
              tokens: Optional[dict[str, str]] = None) -> ThreadingHTTPServer:
    """Start the gateway; returns the running server (serve in a thread)."""
    host, _, port = bind_address.partition(":")
    app = GatewayApp(data_dir, tokens=tokens)
    handler = type("BoundHandler", (GatewayHandler,), {"app": app})
    server = ThreadingHTTPServer((host or "127.0.0.1", int(port or 8787)), handler)
    server.app = app
    return server

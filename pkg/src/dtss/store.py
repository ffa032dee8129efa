"""On-disk persistence for scenarios, runs, and assessments.

Layout under the data dir:

    index.json                      (single source of visibility)
    scenarios/<id>.scenario.json
    runs/<run_id>/trace.ndjson
    runs/<run_id>/meta.json
    assessments/<id>.json

Every index update is write-temp-then-rename, and a run's files are fully
written before the index references them, so a crash can leave orphaned
files but never a partially visible run.
"""

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dtss.errors import DtssError


class DuplicateRunError(DtssError):
    pass


class NotFoundError(DtssError):
    pass


@dataclass(frozen=True)
class StoredRun:
    run_id: str
    spec_hash: str
    scenario_id: str
    seed: int
    status: str  # QUEUED | RUNNING | DONE | FAILED
    created_at: float
    error: Optional[str] = None
    outcome: Optional[dict] = None


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class RunStore:
    def __init__(self, data_dir):
        self.root = Path(data_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "runs").mkdir(exist_ok=True)
        (self.root / "scenarios").mkdir(exist_ok=True)
        (self.root / "assessments").mkdir(exist_ok=True)
        self._index_path = self.root / "index.json"
        if not self._index_path.exists():
            self._write_index({"runs": {}, "scenarios": {}, "assessments": {}})

    # -- index -------------------------------------------------------------

    def _read_index(self) -> dict:
        with open(self._index_path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def _write_index(self, index: dict) -> None:
        blob = json.dumps(index, sort_keys=True, indent=1).encode("utf-8")
        _atomic_write(self._index_path, blob)

    # -- scenarios -----------------------------------------------------------

    def put_scenario(self, doc: dict) -> str:
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False).encode("utf-8")
        scenario_id = hashlib.sha256(blob).hexdigest()[:16]
        path = self.root / "scenarios" / f"{scenario_id}.scenario.json"
        _atomic_write(path, blob)
        index = self._read_index()
        index["scenarios"][scenario_id] = {
            "scenario_id": scenario_id,
            "name": doc.get("name", ""),
            "created_at": time.time(),
        }
        self._write_index(index)
        return scenario_id

    def get_scenario(self, scenario_id: str) -> dict:
        index = self._read_index()
        if scenario_id not in index["scenarios"]:
            raise NotFoundError(f"unknown scenario: {scenario_id}")
        path = self.root / "scenarios" / f"{scenario_id}.scenario.json"
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def list_scenarios(self) -> list[dict]:
        index = self._read_index()
        return sorted(index["scenarios"].values(),
                      key=lambda s: s["scenario_id"])

    # -- runs ----------------------------------------------------------------

    def register_run(self, run: StoredRun) -> None:
        index = self._read_index()
        if run.run_id in index["runs"]:
            raise DuplicateRunError(f"run already exists: {run.run_id}")
        index["runs"][run.run_id] = self._run_doc(run)
        self._write_index(index)

    def set_run_status(self, run_id: str, status: str,
                       error: Optional[str] = None,
                       outcome: Optional[dict] = None) -> None:
        index = self._read_index()
        if run_id not in index["runs"]:
            raise NotFoundError(f"unknown run: {run_id}")
        index["runs"][run_id]["status"] = status
        if error is not None:
            index["runs"][run_id]["error"] = error
        if outcome is not None:
            index["runs"][run_id]["outcome"] = outcome
        self._write_index(index)

    @staticmethod
    def _run_doc(run: StoredRun) -> dict:
        doc = {
            "run_id": run.run_id,
            "spec_hash": run.spec_hash,
            "scenario_id": run.scenario_id,
            "seed": run.seed,
            "status": run.status,
            "created_at": run.created_at,
        }
        if run.error is not None:
            doc["error"] = run.error
        if run.outcome is not None:
            doc["outcome"] = run.outcome
        return doc

    def persist_run(self, trace, scenario_id: str = "") -> StoredRun:
        """Write a completed trace; files land before the index entry."""
        from dtss.engine import trace_to_bytes  # avoid import cycle

        run_id = trace.run_id
        index = self._read_index()
        existing = index["runs"].get(run_id)
        if existing is not None and existing["status"] == "DONE":
            raise DuplicateRunError(f"run already persisted: {run_id}")
        run_dir = self.root / "runs" / run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(run_dir / "trace.ndjson", trace_to_bytes(trace))
        outcome = None
        if trace.outcome is not None:
            o = trace.outcome
            outcome = {
                "detected_before_exec": o.detected_before_exec,
                "t_exec_ms": o.t_exec_ms,
                "t_first_composite": o.t_first_composite,
                "t_first_detection_ms": o.t_first_detection_ms,
                "lead_time_ms": o.lead_time_ms,
            }
        meta = {
            "run_id": run_id,
            "scenario": trace.scenario,
            "scenario_id": scenario_id,
            "spec_hash": trace.spec_hash,
            "seed": trace.seed,
            "outcome": outcome,
        }
        _atomic_write(run_dir / "meta.json",
                      json.dumps(meta, sort_keys=True, indent=1).encode("utf-8"))
        run = StoredRun(run_id=run_id, spec_hash=trace.spec_hash,
                        scenario_id=scenario_id, seed=trace.seed,
                        status="DONE", created_at=time.time(), outcome=outcome)
        index = self._read_index()
        index["runs"][run_id] = self._run_doc(run)
        self._write_index(index)
        return run

    def get_run(self, run_id: str) -> dict:
        index = self._read_index()
        if run_id not in index["runs"]:
            raise NotFoundError(f"unknown run: {run_id}")
        return index["runs"][run_id]

    def trace_path(self, run_id: str) -> Path:
        self.get_run(run_id)
        return self.root / "runs" / run_id / "trace.ndjson"

    def load_trace_lines(self, run_id: str) -> list[str]:
        run = self.get_run(run_id)
        if run["status"] != "DONE":
            raise NotFoundError(f"run {run_id} is {run['status']}, not DONE")
        with open(self.trace_path(run_id), "r", encoding="utf-8") as fh:
            return [line.rstrip("\n") for line in fh if line.strip()]

    # -- assessments -----------------------------------------------------------

    def register_assessment(self, assessment_id: str, request: dict) -> None:
        index = self._read_index()
        index["assessments"][assessment_id] = {
            "assessment_id": assessment_id,
            "status": "QUEUED",
            "request": request,
            "created_at": time.time(),
        }
        self._write_index(index)

    def set_assessment(self, assessment_id: str, status: str,
                       result: Optional[dict] = None,
                       error: Optional[str] = None) -> None:
        index = self._read_index()
        if assessment_id not in index["assessments"]:
            raise NotFoundError(f"unknown assessment: {assessment_id}")
        index["assessments"][assessment_id]["status"] = status
        if error is not None:
            index["assessments"][assessment_id]["error"] = error
        self._write_index(index)
        if result is not None:
            path = self.root / "assessments" / f"{assessment_id}.json"
            _atomic_write(path, json.dumps(result, sort_keys=True,
                                           indent=1).encode("utf-8"))

    def get_assessment(self, assessment_id: str) -> dict:
        index = self._read_index()
        if assessment_id not in index["assessments"]:
            raise NotFoundError(f"unknown assessment: {assessment_id}")
        doc = dict(index["assessments"][assessment_id])
        if doc["status"] == "DONE":
            path = self.root / "assessments" / f"{assessment_id}.json"
            with open(path, "r", encoding="utf-8") as fh:
                doc["result"] = json.load(fh)
        return doc

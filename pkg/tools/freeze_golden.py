"""Freeze golden traces for the bundled use-case scenarios.

Runs each bundled scenario at seed 42, verifies the expected composite
event fires before attack execution with positive lead time, and locks
the full trace digest into tests/golden/golden_traces.json. Re-run after
any intentional engine or scenario change:

    python3 tools/freeze_golden.py
"""

import hashlib
import json
from pathlib import Path

from dtss.engine import CompiledScenario, trace_to_bytes
from dtss.scenario import load_bundled

GOLDEN_PATH = Path(__file__).resolve().parents[1] / "tests" / "golden" / "golden_traces.json"

EXPECTED_RULES = {
    "metro_bomb": "bomb-precursor",
    "waterfront_hybrid": "hybrid-precursor",
    "cathedral_uav": "uav-strike-precursor",
}

SEED = 42


def main():
    golden = {}
    for name, rule_id in EXPECTED_RULES.items():
        spec = load_bundled(name)
        trace = CompiledScenario(spec).run(SEED)
        matching = [e for e in trace.composite_events if e.rule_id == rule_id]
        assert matching, f"{name}: expected composite {rule_id} did not fire"
        first = min(e.t_trigger for e in matching)
        assert first <= spec.attack.t_exec_ms, f"{name}: composite after exec"
        assert trace.outcome.lead_time_ms is not None
        assert trace.outcome.lead_time_ms > 0, f"{name}: no positive lead time"
        blob = trace_to_bytes(trace)
        golden[name] = {
            "seed": SEED,
            "expected_rule": rule_id,
            "t_first_composite": trace.outcome.t_first_composite,
            "t_exec_ms": spec.attack.t_exec_ms,
            "lead_time_ms": trace.outcome.lead_time_ms,
            "n_observations": len(trace.observations),
            "n_alerts": len(trace.alerts),
            "n_composite_events": len(trace.composite_events),
            "trace_sha256": hashlib.sha256(blob).hexdigest(),
        }
        print(f"{name}: composite {rule_id} at {first} ms "
              f"(lead {trace.outcome.lead_time_ms} ms), "
              f"{len(trace.observations)} obs, sha {golden[name]['trace_sha256'][:16]}...")
    GOLDEN_PATH.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN_PATH.write_text(json.dumps(golden, indent=1, sort_keys=True) + "\n",
                           encoding="utf-8")
    print(f"golden file written: {GOLDEN_PATH}")


if __name__ == "__main__":
    main()

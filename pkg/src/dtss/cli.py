"""Command-line interface.

    dtss run     --scenario F --seed N [--out PATH]
    dtss assess  --scenario F --runs N [--base-seed N] [--sweep F]
                 [--per-zone] --report DIR [--budget N]
    dtss replay  --trace F --speed X
    dtss report  --run ID --audience A [--data DIR] [--text]
    dtss serve   [--bind ADDR] [--data DIR]

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime error.
--scenario accepts a bundled name (metro_bomb, waterfront_hybrid,
cathedral_uav) or a path to a .scenario.json file.
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

from dtss.assess import AssessmentConfig, sweep_parameters
from dtss.engine import CompiledScenario, trace_to_bytes
from dtss.errors import (
    DtssError,
    ScenarioParseError,
    ScenarioValidationError,
)
from dtss.fusion import Audience
from dtss.scenario import ScenarioSpec, load_bundled, load_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

BUNDLED = ("metro_bomb", "waterfront_hybrid", "cathedral_uav")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _load_spec(ref: str) -> ScenarioSpec:
    if ref in BUNDLED:
        return load_bundled(ref)
    return load_scenario(Path(ref))


def _cmd_run(args) -> int:
    spec = _load_spec(args.scenario)
    compiled = CompiledScenario(spec)
    trace = compiled.run(args.seed)
    out_path = Path(args.out) if args.out else Path(
        f"{spec.name}-seed{args.seed}.trace.ndjson")
    out_path.write_bytes(trace_to_bytes(trace))
    o = trace.outcome
    print(f"run {trace.run_id}: scenario={spec.name} seed={args.seed}")
    print(f"  observations={len(trace.observations)} alerts={len(trace.alerts)} "
          f"composite_events={len(trace.composite_events)}")
    print(f"  detected_before_exec={o.detected_before_exec} "
          f"lead_time_ms={o.lead_time_ms}")
    print(f"  trace written to {out_path}")
    return EXIT_OK


def _cmd_assess(args) -> int:
    spec = _load_spec(args.scenario)
    sweep = ()
    if args.sweep:
        with open(args.sweep, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        sweep = tuple((item["path"], list(item["values"])) for item in doc)
    cfg = AssessmentConfig(spec=spec, n_runs=args.runs, base_seed=args.base_seed,
                           sweep=sweep, per_zone=args.per_zone,
                           budget=args.budget)
    result = sweep_parameters(cfg)
    report_dir = Path(args.report)
    report_dir.mkdir(parents=True, exist_ok=True)
    (report_dir / "assessment.json").write_text(result.to_json() + "\n",
                                                encoding="utf-8")
    (report_dir / "assessment.csv").write_text(result.to_csv(), encoding="utf-8")
    for point in result.points:
        label = ", ".join(f"{k}={v}" for k, v in point.params.items()) or "baseline"
        print(f"{label}: detection_rate={point.detection_rate:.4f} "
              f"V={point.vulnerability:.4f}")
    if result.per_zone:
        for zone_id in sorted(result.per_zone):
            print(f"zone {zone_id}: V={result.per_zone[zone_id]:.4f}")
    print(f"report written to {report_dir}/assessment.json and .csv")
    return EXIT_OK


def _cmd_replay(args) -> int:
    if args.speed < 0:
        raise _UsageError("--speed must be >= 0")
    prev_t = None
    with open(args.trace, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            obj = json.loads(line)
            t = None
            for key in ("timestamp_ms", "t_end", "t_trigger", "t"):
                if key in obj:
                    t = obj[key]
                    break
            if args.speed > 0 and prev_t is not None and t is not None \
                    and t > prev_t:
                time.sleep(min((t - prev_t) / 1000.0 / args.speed, 30.0))
            if t is not None:
                prev_t = t
            print(line)
    return EXIT_OK


def _cmd_report(args) -> int:
    from dtss.fusion import render_report_text
    from dtss.server import GatewayApp

    data_dir = args.data or os.environ.get("DTSS_DATA_DIR")
    if not data_dir:
        raise _UsageError("--data DIR (or DTSS_DATA_DIR) is required")
    audience = Audience(args.audience.upper())
    app = GatewayApp(data_dir, tokens={"cli": "ADMIN"})
    report = app.build_report(args.run, audience)
    if args.text:
        print(render_report_text(report))
    else:
        print(json.dumps(report, sort_keys=True, indent=1))
    return EXIT_OK


def _cmd_serve(args) -> int:
    from dtss.server import serve_api

    bind = args.bind or os.environ.get("DTSS_BIND_ADDR", "127.0.0.1:8787")
    data_dir = args.data or os.environ.get("DTSS_DATA_DIR", "./dtss-data")
    server = serve_api(bind, data_dir)
    host, port = server.server_address[:2]
    print(f"dtss gateway listening on http://{host}:{port} (data: {data_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("shutting down")
        server.shutdown()
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="dtss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one deterministic scenario run")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--seed", type=int, required=True)
    p_run.add_argument("--out")
    p_run.set_defaults(func=_cmd_run)

    p_assess = sub.add_parser("assess", help="Monte-Carlo vulnerability assessment")
    p_assess.add_argument("--scenario", required=True)
    p_assess.add_argument("--runs", type=int, required=True)
    p_assess.add_argument("--base-seed", type=int, default=0)
    p_assess.add_argument("--sweep", help="JSON file: [{path, values}, ...]")
    p_assess.add_argument("--per-zone", action="store_true")
    p_assess.add_argument("--report", required=True, help="output directory")
    p_assess.add_argument("--budget", type=int, default=100_000)
    p_assess.set_defaults(func=_cmd_assess)

    p_replay = sub.add_parser("replay", help="replay a trace file to stdout")
    p_replay.add_argument("--trace", required=True)
    p_replay.add_argument("--speed", type=float, default=0.0,
                          help="0 = as fast as possible")
    p_replay.set_defaults(func=_cmd_replay)

    p_report = sub.add_parser("report", help="export a shareable run report")
    p_report.add_argument("--run", required=True)
    p_report.add_argument("--audience", default="LOCAL",
                          choices=["LOCAL", "NATIONAL", "INTERNATIONAL",
                                   "local", "national", "international"])
    p_report.add_argument("--data")
    p_report.add_argument("--text", action="store_true",
                          help="print the human-readable rendering")
    p_report.set_defaults(func=_cmd_report)

    p_serve = sub.add_parser("serve", help="start the HTTP gateway")
    p_serve.add_argument("--bind")
    p_serve.add_argument("--data")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioParseError, ScenarioValidationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DtssError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

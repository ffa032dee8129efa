"""Monte-Carlo vulnerability assessment over seeded scenario runs.

All grid points of a sweep reuse the same seed block (common random
numbers), which makes comparisons between configurations noise-free and
the sensor-monotonicity property exact. Vulnerability is defined as
V = 1 - P(attack detected before its scripted execution time).
"""

import copy
import csv
import io
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Optional

from dtss.engine import CompiledScenario
from dtss.errors import BudgetExceededError, UnknownParameterError
from dtss.scenario import ScenarioSpec, parse_scenario, scenario_to_dict, validate_scenario

DEFAULT_RUN_BUDGET = 100_000


@dataclass(frozen=True)
class AssessmentPoint:
    params: dict
    n_runs: int
    base_seed: int
    detection_rate: float
    vulnerability: float
    mean_time_to_detect_ms: Optional[float]
    mean_lead_time_ms: Optional[float]
    detected_count: int


@dataclass
class AssessmentResult:
    scenario: str
    spec_hash: str
    n_runs: int
    base_seed: int
    points: list[AssessmentPoint] = field(default_factory=list)
    per_zone: Optional[dict] = None  # zone_id -> vulnerability

    def to_dict(self) -> dict:
        doc = {
            "scenario": self.scenario,
            "spec_hash": self.spec_hash,
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "points": [{
                "params": p.params,
                "n_runs": p.n_runs,
                "base_seed": p.base_seed,
                "detection_rate": p.detection_rate,
                "vulnerability": p.vulnerability,
                "mean_time_to_detect_ms": p.mean_time_to_detect_ms,
                "mean_lead_time_ms": p.mean_lead_time_ms,
                "detected_count": p.detected_count,
            } for p in self.points],
        }
        if self.per_zone is not None:
            doc["per_zone"] = self.per_zone
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False)

    def to_csv(self) -> str:
        """Tabular rendering: one row per grid point (then per zone)."""
        param_keys = sorted({k for p in self.points for k in p.params})
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(param_keys + ["detection_rate", "mean_ttd_ms",
                                      "mean_lead_ms", "V"])
        for p in self.points:
            row = [p.params.get(k, "") for k in param_keys]
            row += [f"{p.detection_rate:.6f}",
                    "" if p.mean_time_to_detect_ms is None
                    else f"{p.mean_time_to_detect_ms:.1f}",
                    "" if p.mean_lead_time_ms is None
                    else f"{p.mean_lead_time_ms:.1f}",
                    f"{p.vulnerability:.6f}"]
            writer.writerow(row)
        if self.per_zone is not None:
            writer.writerow([])
            writer.writerow(["zone_id", "V_zone"])
            for zone_id in sorted(self.per_zone):
                writer.writerow([zone_id, f"{self.per_zone[zone_id]:.6f}"])
        return buf.getvalue()


def _run_outcomes(compiled: CompiledScenario, seeds: list[int]) -> list:
    return [compiled.run(seed).outcome for seed in seeds]


def _outcomes_to_point(outcomes, params, n_runs, base_seed) -> AssessmentPoint:
    detected = [o for o in outcomes if o.detected_before_exec]
    rate = len(detected) / n_runs
    ttds = [o.t_first_detection_ms for o in detected
            if o.t_first_detection_ms is not None]
    leads = [o.lead_time_ms for o in detected if o.lead_time_ms is not None]
    return AssessmentPoint(
        params=params, n_runs=n_runs, base_seed=base_seed,
        detection_rate=rate,
        vulnerability=1.0 - rate,
        mean_time_to_detect_ms=(sum(ttds) / len(ttds)) if ttds else None,
        mean_lead_time_ms=(sum(leads) / len(leads)) if leads else None,
        detected_count=len(detected),
    )


def evaluate_configuration(spec: ScenarioSpec, n_runs: int, base_seed: int,
                           params: Optional[dict] = None,
                           budget: int = DEFAULT_RUN_BUDGET,
                           workers: int = 1) -> AssessmentPoint:
    """Detection statistics over seeds base_seed .. base_seed + n_runs - 1."""
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    if n_runs > budget:
        raise BudgetExceededError(f"{n_runs} runs exceed budget {budget}")
    compiled = CompiledScenario(spec)
    seeds = list(range(base_seed, base_seed + n_runs))
    if workers > 1:
        chunks = [seeds[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_outcomes, [compiled] * workers, chunks))
        by_seed = {}
        for chunk, outs in zip(chunks, results):
            by_seed.update(zip(chunk, outs))
        outcomes = [by_seed[s] for s in seeds]  # reduce in ascending seed order
    else:
        outcomes = _run_outcomes(compiled, seeds)
    return _outcomes_to_point(outcomes, params or {}, n_runs, base_seed)


_PATH_TOKEN = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)|\[(\d+)\]")


def _parse_path(path: str) -> list:
    tokens = []
    pos = 0
    for m in _PATH_TOKEN.finditer(path):
        if m.start() != pos:
            raise UnknownParameterError(f"bad parameter path syntax: {path!r}")
        tokens.append(m.group(1) if m.group(1) is not None else int(m.group(2)))
        pos = m.end()
        if pos < len(path) and path[pos] == ".":
            pos += 1
    if pos != len(path) or not tokens:
        raise UnknownParameterError(f"bad parameter path syntax: {path!r}")
    return tokens


def apply_binding(spec: ScenarioSpec, path: str, value) -> ScenarioSpec:
    """Return a new spec with one dot-path binding applied.

    Paths address the scenario document (e.g. `sensors[0].p_base`,
    `detector_cfg.loiter_min_ms`, `crowd.count`, `attack.t_exec_ms`).
    """
    doc = scenario_to_dict(spec)
    tokens = _parse_path(path)
    node = doc
    for i, tok in enumerate(tokens[:-1]):
        try:
            node = node[tok]
        except (KeyError, IndexError, TypeError):
            raise UnknownParameterError(
                f"unknown parameter path {path!r} (failed at {tok!r})") from None
    leaf = tokens[-1]
    try:
        exists = (leaf in node) if isinstance(node, dict) else (
            isinstance(leaf, int) and 0 <= leaf < len(node))
    except TypeError:
        exists = False
    if not exists:
        raise UnknownParameterError(
            f"unknown parameter path {path!r} (no such leaf {leaf!r})")
    node[leaf] = value
    return parse_scenario(doc)


@dataclass(frozen=True)
class AssessmentConfig:
    spec: ScenarioSpec
    n_runs: int
    base_seed: int
    sweep: tuple = ()          # ((path, [values...]), ...)
    per_zone: bool = False
    budget: int = DEFAULT_RUN_BUDGET


def sweep_parameters(cfg: AssessmentConfig) -> AssessmentResult:
    """Evaluate every point of the cartesian sweep grid under paired seeds."""
    paths = [p for p, _ in cfg.sweep]
    value_lists = [list(vs) for _, vs in cfg.sweep]
    grid_size = math.prod(len(v) for v in value_lists) if value_lists else 1
    total = grid_size * cfg.n_runs
    if total > cfg.budget:
        raise BudgetExceededError(
            f"sweep needs {total} runs, budget is {cfg.budget}")

    result = AssessmentResult(
        scenario=cfg.spec.name, spec_hash=cfg.spec.spec_hash(),
        n_runs=cfg.n_runs, base_seed=cfg.base_seed)
    combos = list(product(*value_lists)) if value_lists else [()]
    for combo in combos:
        spec = cfg.spec
        params = {}
        for path, value in zip(paths, combo):
            spec = apply_binding(spec, path, value)
            params[path] = value
        result.points.append(evaluate_configuration(
            spec, cfg.n_runs, cfg.base_seed, params=params, budget=cfg.budget))
    if cfg.per_zone:
        result.per_zone = zone_vulnerability(cfg.spec, cfg.n_runs, cfg.base_seed,
                                             budget=cfg.budget)
    return result


def retarget_attack(spec: ScenarioSpec, zone_id: str) -> ScenarioSpec:
    """Variant of a scenario with the attack aimed at another zone.

    Attacker actors' waypoints are translated so the scripted drop point
    (or the attacker position at execution time) lands on the zone's
    interior anchor; the translated path is clamped into world bounds.
    """
    zone = spec.zone_by_id(zone_id)
    ax, ay = zone.interior_point()
    new_spec = copy.deepcopy(spec)
    new_spec.attack = replace(spec.attack, target_zone_id=zone_id)
    bounds = spec.world_bounds
    new_actors = []
    for actor in new_spec.actors:
        if not actor.attacker or not actor.waypoints:
            new_actors.append(actor)
            continue
        if actor.drop_at is not None:
            ref_t = actor.drop_at[0]
        else:
            ref_t = min(spec.attack.t_exec_ms, actor.waypoints[-1][0])
        ref = actor.position_at(ref_t)
        dx = ax - ref[0]
        dy = ay - ref[1]
        moved = tuple(
            (t, (min(max(p[0] + dx, bounds.x_min), bounds.x_max),
                 min(max(p[1] + dy, bounds.y_min), bounds.y_max),
                 p[2]))
            for t, p in actor.waypoints)
        new_actors.append(replace(actor, waypoints=moved))
    new_spec.actors = new_actors
    validate_scenario(new_spec)
    return new_spec


def zone_vulnerability(spec: ScenarioSpec, n_runs: int, base_seed: int,
                       budget: int = DEFAULT_RUN_BUDGET) -> dict:
    """V per zone: re-run the scenario with the attack retargeted there."""
    if not spec.zones:
        raise ValueError("scenario has no zones")
    if spec.attack is None:
        raise ValueError("scenario has no attack to retarget")
    total = len(spec.zones) * n_runs
    if total > budget:
        raise BudgetExceededError(
            f"per-zone assessment needs {total} runs, budget is {budget}")
    out = {}
    for zone in spec.zones:
        variant = retarget_attack(spec, zone.zone_id)
        point = evaluate_configuration(variant, n_runs, base_seed, budget=budget)
        out[zone.zone_id] = point.vulnerability
    return out

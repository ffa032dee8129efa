"""Regenerate the bundled scenario files.

Run from the repo root:  python tools/gen_scenarios.py
The three scripts encode the use cases described in docs/scenario_format.md;
timelines are arithmetic-heavy, so they are generated rather than
hand-edited.
"""

import json
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "dtss" / "scenarios"

DAY = 86_400_000
SEC = 1000


def metro_bomb():
    P = 10 * DAY  # physical window opens on attack day
    return {
        "name": "metro_bomb",
        "world_bounds": {"x_min": 0, "y_min": 0, "x_max": 200, "y_max": 120},
        "duration_ms": P + 300 * SEC,
        "phys_start_ms": P,
        "eval_period_ms": 5000,
        "zones": [
            {"zone_id": "platform",
             "polygon": [[70, 20], [190, 20], [190, 60], [70, 60]],
             "tags": ["critical"]},
            {"zone_id": "concourse",
             "polygon": [[70, 62], [190, 62], [190, 100], [70, 100]],
             "tags": []},
            {"zone_id": "entrance",
             "polygon": [[10, 62], [68, 62], [68, 100], [10, 100]],
             "tags": []},
        ],
        "sensors": [
            {"sensor_id": "cctv-entrance", "modality": "CctvTrack",
             "position": [39, 81, 3], "coverage_radius_m": 35,
             "p_base": 0.92, "period_ms": 1000, "occlusion_kappa": 150},
            {"sensor_id": "cctv-concourse", "modality": "CctvTrack",
             "position": [130, 81, 3], "coverage_radius_m": 40,
             "p_base": 0.92, "period_ms": 1000, "occlusion_kappa": 150},
            {"sensor_id": "cctv-platform-w", "modality": "CctvTrack",
             "position": [100, 40, 3], "coverage_radius_m": 38,
             "p_base": 0.92, "period_ms": 1000, "occlusion_kappa": 150},
            {"sensor_id": "cctv-platform-e", "modality": "CctvTrack",
             "position": [160, 40, 3], "coverage_radius_m": 38,
             "p_base": 0.92, "period_ms": 1000, "occlusion_kappa": 150},
        ],
        "cell_map": [
            {"cell_id": "cell-station", "position": [130, 40, 0]},
            {"cell_id": "cell-city", "position": [10, 5, 0]},
        ],
        "crowd": {"count": 14, "speed_mps": 1.3},
        "actors": [
            {"actor_id": "s-alpha", "kind": "PersonTrack", "attacker": True,
             "face_feature": "suspect-alpha",
             "carries": ["bag-1"],
             "drop_at": [P + 100 * SEC, "bag-1"],
             "waypoints": [
                 [P, [30, 80, 0]],
                 [P + 30 * SEC, [80, 80, 0]],
                 [P + 55 * SEC, [110, 70, 0]],
                 [P + 70 * SEC, [110, 36, 0]],
                 [P + 195 * SEC, [110, 36, 0]],
                 [P + 240 * SEC, [80, 80, 0]],
                 [P + 265 * SEC, [30, 80, 0]],
             ]},
            {"actor_id": "s-bravo", "kind": "PersonTrack",
             "face_feature": "suspect-bravo",
             "waypoints": [
                 [P + 10 * SEC, [25, 95, 0]],
                 [P + 40 * SEC, [40, 80, 0]],
                 [P + 175 * SEC, [40, 80, 0]],
                 [P + 200 * SEC, [25, 95, 0]],
             ]},
            {"actor_id": "dev-alpha", "kind": "MobileDevice",
             "imsi": "310150123456789",
             "events": [
                 [1 * DAY + 9 * 3600 * SEC, {"cell_id": "cell-station", "event": "register"}],
                 [1 * DAY + 10 * 3600 * SEC, {"cell_id": "cell-station", "event": "data"}],
                 [5 * DAY + 14 * 3600 * SEC, {"cell_id": "cell-station", "event": "register"}],
                 [9 * DAY + 11 * 3600 * SEC, {"cell_id": "cell-station", "event": "register"}],
                 [9 * DAY + 11 * 3600 * SEC + 240 * SEC, {"cell_id": "cell-station", "event": "data"}],
                 [P + 30 * SEC, {"cell_id": "cell-station", "event": "call"}],
                 [P + 80 * SEC, {"cell_id": "cell-station", "event": "call"}],
                 [P + 130 * SEC, {"cell_id": "cell-station", "event": "call"}],
                 [P + 180 * SEC, {"cell_id": "cell-station", "event": "call"}],
                 [P + 230 * SEC, {"cell_id": "cell-station", "event": "call"}],
             ]},
            {"actor_id": "officer-7", "kind": "Officer",
             "events": [
                 [9 * DAY + 12 * 3600 * SEC,
                  {"text": "patrol: male photographing platform cameras and exits",
                   "reported_subject_id": "s-alpha"}],
             ]},
        ],
        "watchlist": [
            {"suspect_id": "alpha", "feature": "suspect-alpha", "label": "known courier"},
            {"suspect_id": "bravo", "feature": "suspect-bravo", "label": "associate"},
            {"suspect_id": "zeta", "feature": "suspect-zeta", "label": "unrelated"},
        ],
        "lexicon_ref": "bundled:threat_terms",
        "detector_cfg": {"loiter_min_ms": 120000},
        "rules": [
            {"rule_id": "bomb-precursor",
             "required_kinds": ["ABANDONED_OBJECT", "LOITERING"],
             "window_ms": 300000, "spatial": "SAME_ZONE", "min_severity": 0.4},
        ],
        "attack": {"target_zone_id": "platform", "t_exec_ms": P + 280 * SEC,
                   "class": "pbied"},
    }


def waterfront_hybrid():
    lanes = []
    # benign traffic: straight lanes at modal surface speed, away from shore
    for i, (y, x0, x1, t0) in enumerate([
            (30, 0, 400, 0), (50, 400, 0, 10), (70, 0, 400, 20),
            (25, 400, 0, 35), (60, 0, 400, 50), (85, 400, 0, 65),
            (40, 0, 400, 90), (75, 400, 0, 110)]):
        lanes.append({
            "actor_id": f"vessel-{i:02d}", "kind": "USV",
            "waypoints": [
                [t0 * SEC, [x0, y, 0]],
                [(t0 + 80) * SEC, [x1, y, 0]],
            ]})
    return {
        "name": "waterfront_hybrid",
        "world_bounds": {"x_min": 0, "y_min": 0, "x_max": 400, "y_max": 260},
        "duration_ms": 360 * SEC,
        "phys_start_ms": 0,
        "eval_period_ms": 5000,
        "zones": [
            {"zone_id": "promenade",
             "polygon": [[100, 150], [300, 150], [300, 200], [100, 200]],
             "tags": ["critical"]},
            {"zone_id": "beach",
             "polygon": [[100, 110], [300, 110], [300, 148], [100, 148]],
             "tags": []},
            {"zone_id": "marina",
             "polygon": [[20, 60], [80, 60], [80, 130], [20, 130]],
             "tags": []},
        ],
        "sensors": [
            {"sensor_id": "sonar-pier", "modality": "SonarContact",
             "position": [200, 120, 0], "coverage_radius_m": 120,
             "p_base": 0.9, "period_ms": 1000, "occlusion_kappa": 0},
            {"sensor_id": "hydro-east", "modality": "HydrophoneEvent",
             "position": [300, 100, -5], "coverage_radius_m": 100,
             "p_base": 0.85, "period_ms": 1000, "occlusion_kappa": 0},
            {"sensor_id": "cctv-prom-1", "modality": "CctvTrack",
             "position": [150, 175, 4], "coverage_radius_m": 45,
             "p_base": 0.9, "period_ms": 1000, "occlusion_kappa": 120},
            {"sensor_id": "cctv-prom-2", "modality": "CctvTrack",
             "position": [250, 175, 4], "coverage_radius_m": 45,
             "p_base": 0.9, "period_ms": 1000, "occlusion_kappa": 120},
        ],
        "cell_map": [],
        "crowd": {"count": 16, "speed_mps": 1.1},
        "actors": lanes + [
            {"actor_id": "usv-x", "kind": "USV", "attacker": True,
             "waypoints": [
                 [0, [10, 20, 0]],
                 [10 * SEC, [60, 60, 0]],
                 [18 * SEC, [110, 30, 0]],
                 [28 * SEC, [160, 80, 0]],
                 [36 * SEC, [200, 50, 0]],
                 [46 * SEC, [240, 100, 0]],
                 [52 * SEC, [260, 130, 0]],
                 [60 * SEC, [272, 148, 0]],
                 [290 * SEC, [268, 146, 0]],
             ]},
            {"actor_id": "uuv-x", "kind": "UUV",
             "waypoints": [
                 [0, [390, 40, -3]],
                 [35 * SEC, [330, 70, -3]],
                 [55 * SEC, [300, 45, -3]],
                 [80 * SEC, [260, 80, -3]],
                 [95 * SEC, [230, 60, -3]],
                 [115 * SEC, [200, 100, -3]],
                 [130 * SEC, [180, 120, -3]],
                 [150 * SEC, [170, 140, -3]],
                 [290 * SEC, [172, 142, -3]],
             ]},
            {"actor_id": "sq-1", "kind": "PersonTrack", "carries": ["dufflebag-1"],
             "drop_at": [140 * SEC, "dufflebag-1"],
             "waypoints": [
                 [0, [320, 190, 0]],
                 [40 * SEC, [220, 170, 0]],
                 [170 * SEC, [220, 170, 0]],
                 [220 * SEC, [320, 195, 0]],
             ]},
            {"actor_id": "sq-2", "kind": "PersonTrack",
             "waypoints": [
                 [5 * SEC, [320, 185, 0]],
                 [45 * SEC, [180, 170, 0]],
                 [175 * SEC, [180, 170, 0]],
                 [225 * SEC, [320, 185, 0]],
             ]},
            {"actor_id": "forum-watch", "kind": "CyberSource",
             "events": [
                 [10 * SEC, {"text": "selling 3d printed usv hull, fits 20kg payload, dm me",
                             "platform": "forum"}],
                 [30 * SEC, {"text": "crew ready for the waterfront, bring the firearm crates",
                             "platform": "chat"}],
             ]},
        ],
        "watchlist": [],
        "lexicon_ref": "bundled:threat_terms",
        "detector_cfg": {"loiter_min_ms": 120000, "recon_radius_m": 40},
        "rules": [
            {"rule_id": "hybrid-precursor",
             "required_kinds": ["SUSPICIOUS_UXV", "CYBER_INDICATOR"],
             "window_ms": 600000, "spatial": "ANY", "min_severity": 0.5},
            {"rule_id": "shore-squad",
             "required_kinds": ["ABANDONED_OBJECT", "LOITERING"],
             "window_ms": 300000, "spatial": "SAME_ZONE", "min_severity": 0.4},
        ],
        "attack": {"target_zone_id": "promenade", "t_exec_ms": 300 * SEC,
                   "class": "usv_ied_and_smallarms"},
    }


def cathedral_uav():
    return {
        "name": "cathedral_uav",
        "world_bounds": {"x_min": 0, "y_min": 0, "x_max": 300, "y_max": 200},
        "duration_ms": 200 * SEC,
        "phys_start_ms": 0,
        "eval_period_ms": 5000,
        "zones": [
            {"zone_id": "square",
             "polygon": [[120, 70], [180, 70], [200, 100], [180, 130],
                         [120, 130], [100, 100]],
             "tags": ["critical"]},
            {"zone_id": "market",
             "polygon": [[220, 40], [280, 40], [280, 90], [220, 90]],
             "tags": []},
            {"zone_id": "park",
             "polygon": [[30, 130], [90, 130], [90, 180], [30, 180]],
             "tags": []},
        ],
        "sensors": [
            {"sensor_id": "rf-north", "modality": "RfDetection",
             "position": [150, 150, 6], "coverage_radius_m": 130,
             "p_base": 0.9, "period_ms": 1000, "occlusion_kappa": 0},
            {"sensor_id": "rf-south", "modality": "RfDetection",
             "position": [150, 50, 6], "coverage_radius_m": 130,
             "p_base": 0.9, "period_ms": 1000, "occlusion_kappa": 0},
            {"sensor_id": "acoustic-1", "modality": "AcousticEvent",
             "position": [150, 100, 4], "coverage_radius_m": 90,
             "p_base": 0.8, "period_ms": 1000, "occlusion_kappa": 0},
            {"sensor_id": "cctv-sq-1", "modality": "CctvTrack",
             "position": [130, 100, 5], "coverage_radius_m": 40,
             "p_base": 0.9, "period_ms": 1000, "occlusion_kappa": 150},
            {"sensor_id": "cctv-sq-2", "modality": "CctvTrack",
             "position": [170, 100, 5], "coverage_radius_m": 40,
             "p_base": 0.9, "period_ms": 1000, "occlusion_kappa": 150},
        ],
        "cell_map": [],
        "crowd": {"count": 20, "speed_mps": 1.0},
        "actors": [
            {"actor_id": "uav-x", "kind": "UAV", "attacker": True,
             "waypoints": [
                 [0, [20, 20, 30]],
                 [8 * SEC, [70, 60, 30]],
                 [14 * SEC, [50, 90, 30]],
                 [20 * SEC, [90, 70, 28]],
                 [26 * SEC, [80, 110, 26]],
                 [33 * SEC, [120, 90, 22]],
                 [40 * SEC, [105, 125, 20]],
                 [48 * SEC, [140, 110, 16]],
                 [55 * SEC, [130, 80, 14]],
                 [63 * SEC, [160, 95, 10]],
                 [70 * SEC, [150, 100, 8]],
                 [160 * SEC, [150, 100, 2]],
             ]},
            {"actor_id": "cam-uav-1", "kind": "UAV",
             "waypoints": [[0, [0, 10, 40]], [30 * SEC, [300, 10, 40]]]},
            {"actor_id": "cam-uav-2", "kind": "UAV",
             "waypoints": [[2 * SEC, [290, 10, 35]], [21 * SEC, [290, 200, 35]]]},
            {"actor_id": "cam-uav-3", "kind": "UAV",
             "waypoints": [[10 * SEC, [10, 190, 30]], [38 * SEC, [290, 190, 30]]]},
            {"actor_id": "lw-1", "kind": "PersonTrack",
             "waypoints": [
                 [0, [115, 60, 0]],
                 [8 * SEC, [135, 95, 0]],
                 [150 * SEC, [135, 95, 0]],
                 [185 * SEC, [110, 55, 0]],
             ]},
            {"actor_id": "lw-2", "kind": "PersonTrack",
             "waypoints": [
                 [3 * SEC, [195, 140, 0]],
                 [12 * SEC, [160, 105, 0]],
                 [155 * SEC, [160, 105, 0]],
                 [190 * SEC, [200, 145, 0]],
             ]},
            {"actor_id": "tg-channel", "kind": "CyberSource",
             "events": [
                 [5 * SEC, {"text": "martyrdom operation at the cathedral feast: "
                                    "drone attack imminent, explosives ready",
                            "platform": "social"}],
             ]},
        ],
        "watchlist": [],
        "lexicon_ref": "bundled:threat_terms",
        "detector_cfg": {"loiter_min_ms": 120000, "recon_radius_m": 50},
        "rules": [
            {"rule_id": "uav-strike-precursor",
             "required_kinds": ["SUSPICIOUS_UXV", "LOITERING"],
             "window_ms": 300000, "spatial": "ANY", "min_severity": 0.45},
        ],
        "attack": {"target_zone_id": "square", "t_exec_ms": 160 * SEC,
                   "class": "uav_ied_and_pbied"},
    }


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for build in (metro_bomb, waterfront_hybrid, cathedral_uav):
        doc = build()
        path = OUT_DIR / f"{doc['name']}.scenario.json"
        path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()

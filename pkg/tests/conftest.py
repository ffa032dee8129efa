"""Shared fixtures and scenario builders for the test suite."""

import pytest

from dtss.scenario import parse_scenario

SEC = 1000


def calibration_doc(p_base=0.5, n_opportunities=3, stand=(25.0, 30.0)):
    """Degenerate single-sensor scenario: detection <=> at least one
    CCTV emission (every emission produces a FaceCapture that matches the
    watchlist with similarity 1.0 and fires a single-kind composite rule).

    The intruder stands inside coverage for exactly `n_opportunities`
    sensor firings (t = 0, 1, ..., n-1 seconds; it vanishes before the
    next firing), so P(detect) = 1 - (1 - p_base) ** n_opportunities.
    """
    last_t = (n_opportunities - 1 + 0.05) * SEC
    return {
        "name": "calibration",
        "world_bounds": {"x_min": 0, "y_min": 0, "x_max": 100, "y_max": 60},
        "duration_ms": 10 * SEC,
        "zones": [
            {"zone_id": "goal",
             "polygon": [[60, 10], [90, 10], [90, 50], [60, 50]],
             "tags": ["critical"]},
        ],
        "sensors": [
            {"sensor_id": "cctv-1", "modality": "CctvTrack",
             "position": [stand[0] - 5.0, stand[1], 3],
             "coverage_radius_m": 20, "p_base": p_base,
             "period_ms": 1000, "occlusion_kappa": 0},
        ],
        "crowd": {"count": 0, "speed_mps": 1.0},
        "actors": [
            {"actor_id": "intruder", "kind": "PersonTrack", "attacker": True,
             "face_feature": "suspect-x",
             "waypoints": [
                 [0, [stand[0], stand[1], 0]],
                 [int(last_t), [stand[0], stand[1], 0]],
             ]},
        ],
        "watchlist": [
            {"suspect_id": "x", "feature": "suspect-x", "label": "test subject"},
        ],
        "rules": [
            {"rule_id": "watch-hit", "required_kinds": ["WATCHLIST_MATCH"],
             "window_ms": 60000, "spatial": "ANY", "min_severity": 0.5},
        ],
        "attack": {"target_zone_id": "goal", "t_exec_ms": 9 * SEC,
                   "class": "test"},
    }


def three_zone_doc(p_mid=0.5):
    """Toy world with analytic per-zone detection probabilities.

    The attacker walks in, stands on the attack anchor for sensor firings
    at t=1,2,3 s, and vanishes. Zone A's sensor is perfect, zone B's fires
    at p_mid, zone C is uncovered: V = (0, 1-(1-p_mid)^3, 1).
    """
    zones = [
        {"zone_id": "zone-a",
         "polygon": [[10, 10], [70, 10], [70, 70], [10, 70]], "tags": ["critical"]},
        {"zone_id": "zone-b",
         "polygon": [[90, 10], [150, 10], [150, 70], [90, 70]], "tags": []},
        {"zone_id": "zone-c",
         "polygon": [[170, 10], [230, 10], [230, 70], [170, 70]], "tags": []},
    ]
    anchor_a = (40.0, 40.0)
    anchor_b = (120.0, 40.0)
    return {
        "name": "three-zone",
        "world_bounds": {"x_min": 0, "y_min": 0, "x_max": 240, "y_max": 80},
        "duration_ms": 10 * SEC,
        "zones": zones,
        "sensors": [
            {"sensor_id": "sensor-a", "modality": "CctvTrack",
             "position": [anchor_a[0], anchor_a[1], 3], "coverage_radius_m": 8,
             "p_base": 1.0, "period_ms": 1000, "occlusion_kappa": 0},
            {"sensor_id": "sensor-b", "modality": "CctvTrack",
             "position": [anchor_b[0], anchor_b[1], 3], "coverage_radius_m": 8,
             "p_base": p_mid, "period_ms": 1000, "occlusion_kappa": 0},
        ],
        "crowd": {"count": 0, "speed_mps": 1.0},
        "actors": [
            {"actor_id": "intruder", "kind": "PersonTrack", "attacker": True,
             "face_feature": "suspect-x",
             "waypoints": [
                 [0, [anchor_a[0] + 40.0, anchor_a[1], 0]],
                 [950, [anchor_a[0], anchor_a[1], 0]],
                 [3050, [anchor_a[0], anchor_a[1], 0]],
             ]},
        ],
        "watchlist": [
            {"suspect_id": "x", "feature": "suspect-x", "label": "test subject"},
        ],
        "rules": [
            {"rule_id": "watch-hit", "required_kinds": ["WATCHLIST_MATCH"],
             "window_ms": 60000, "spatial": "ANY", "min_severity": 0.5},
        ],
        "attack": {"target_zone_id": "zone-a", "t_exec_ms": 9 * SEC,
                   "class": "test"},
    }


@pytest.fixture
def calibration_spec():
    return parse_scenario(calibration_doc())


@pytest.fixture
def three_zone_spec():
    return parse_scenario(three_zone_doc())

"""Polygon zones and the plane geometry used across modules.

All distances are 2D (XY); altitude/depth never enters spatial relations.
Containment follows the even-odd rule with boundary counting as inside.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from dtss import kernels
from dtss.errors import OverlappingZonesError, ScenarioValidationError


@dataclass
class Zone:
    zone_id: str
    polygon: list[tuple[float, float]]
    tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.polygon) < 3:
            raise ScenarioValidationError(
                f"zone {self.zone_id}: polygon needs >= 3 vertices")
        self._xs = np.asarray([p[0] for p in self.polygon], dtype=np.float64)
        self._ys = np.asarray([p[1] for p in self.polygon], dtype=np.float64)

    @property
    def xs(self) -> np.ndarray:
        return self._xs

    @property
    def ys(self) -> np.ndarray:
        return self._ys

    def contains(self, x: float, y: float) -> bool:
        return kernels.point_in_polygon(float(x), float(y), self._xs, self._ys)

    def distance_to(self, x: float, y: float) -> float:
        return kernels.point_polygon_distance(float(x), float(y), self._xs, self._ys)

    @property
    def is_critical(self) -> bool:
        return "critical" in self.tags

    def area(self) -> float:
        return abs(signed_area(self.polygon))

    def centroid(self) -> tuple[float, float]:
        return polygon_centroid(self.polygon)

    def interior_point(self) -> tuple[float, float]:
        """Centroid when it falls inside; otherwise a deepest grid point.

        Non-convex zones can have an exterior centroid; the fallback scans
        a grid over the bounding box and picks the inside point farthest
        from the boundary (a cheap pole-of-inaccessibility stand-in).
        """
        cx, cy = self.centroid()
        if self.contains(cx, cy):
            return (cx, cy)
        best = None
        best_depth = -1.0
        xs, ys = self._xs, self._ys
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        for i in range(1, 20):
            for j in range(1, 20):
                px = x0 + (x1 - x0) * i / 20.0
                py = y0 + (y1 - y0) * j / 20.0
                if not self.contains(px, py):
                    continue
                depth = min(
                    _seg_dist(px, py, self.polygon[k - 1], self.polygon[k])
                    for k in range(len(self.polygon)))
                if depth > best_depth:
                    best_depth = depth
                    best = (px, py)
        if best is None:
            raise ScenarioValidationError(
                f"zone {self.zone_id}: could not find interior point")
        return best


def _seg_dist(px, py, a, b):
    x1, y1 = a
    x2, y2 = b
    dx, dy = x2 - x1, y2 - y1
    l2 = dx * dx + dy * dy
    if l2 == 0.0:
        return math.sqrt((px - x1) ** 2 + (py - y1) ** 2)
    t = max(0.0, min(1.0, ((px - x1) * dx + (py - y1) * dy) / l2))
    return math.sqrt((px - (x1 + t * dx)) ** 2 + (py - (y1 + t * dy)) ** 2)


def signed_area(polygon) -> float:
    s = 0.0
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i - 1]
        x2, y2 = polygon[i]
        s += x1 * y2 - x2 * y1
    return s / 2.0


def polygon_centroid(polygon) -> tuple[float, float]:
    a = signed_area(polygon)
    if a == 0.0:
        xs = [p[0] for p in polygon]
        ys = [p[1] for p in polygon]
        return (sum(xs) / len(xs), sum(ys) / len(ys))
    cx = cy = 0.0
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i - 1]
        x2, y2 = polygon[i]
        w = x1 * y2 - x2 * y1
        cx += (x1 + x2) * w
        cy += (y1 + y2) * w
    return (cx / (6.0 * a), cy / (6.0 * a))


def _segments_cross(p1, p2, p3, p4) -> bool:
    """Proper crossing (interiors intersect at a single point)."""
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    o1 = orient(p1, p2, p3)
    o2 = orient(p1, p2, p4)
    o3 = orient(p3, p4, p1)
    o4 = orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _strictly_inside(zone: Zone, x: float, y: float) -> bool:
    if not zone.contains(x, y):
        return False
    # On-boundary points are "inside" per the containment rule; exclude them.
    for k in range(len(zone.polygon)):
        if _seg_dist(x, y, zone.polygon[k - 1], zone.polygon[k]) == 0.0:
            return False
    return True


def zones_overlap(a: Zone, b: Zone) -> bool:
    """True when interiors intersect; shared boundaries are allowed."""
    for k in range(len(a.polygon)):
        for m in range(len(b.polygon)):
            if _segments_cross(a.polygon[k - 1], a.polygon[k],
                               b.polygon[m - 1], b.polygon[m]):
                return True
    if any(_strictly_inside(b, x, y) for x, y in a.polygon):
        return True
    if any(_strictly_inside(a, x, y) for x, y in b.polygon):
        return True
    # One fully containing the other without vertex contact.
    ax, ay = a.interior_point()
    bx, by = b.interior_point()
    return _strictly_inside(b, ax, ay) or _strictly_inside(a, bx, by)


def validate_zones(zones: list[Zone]) -> None:
    seen = set()
    for z in zones:
        if z.zone_id in seen:
            raise OverlappingZonesError(f"duplicate zone id: {z.zone_id}")
        seen.add(z.zone_id)
    for i in range(len(zones)):
        for j in range(i + 1, len(zones)):
            if zones_overlap(zones[i], zones[j]):
                raise OverlappingZonesError(
                    f"zones overlap: {zones[i].zone_id} / {zones[j].zone_id}")


def flatten_zones(zones: list[Zone]):
    """Flatten polygons for the batch containment kernel."""
    offs = [0]
    xs: list[float] = []
    ys: list[float] = []
    for z in zones:
        xs.extend(float(v) for v in z.xs)
        ys.extend(float(v) for v in z.ys)
        offs.append(len(xs))
    return (np.asarray(offs, dtype=np.int64),
            np.asarray(xs, dtype=np.float64),
            np.asarray(ys, dtype=np.float64))


def assign_zones(points: list[tuple[float, float]], zones: list[Zone]) -> list[int]:
    """Zone index per point (-1 when in no zone); boundary counts as inside."""
    if not points or not zones:
        return [-1] * len(points)
    pxs = np.asarray([p[0] for p in points], dtype=np.float64)
    pys = np.asarray([p[1] for p in points], dtype=np.float64)
    offs, zxs, zys = flatten_zones(zones)
    out = np.empty(len(points), dtype=np.int64)
    kernels.polygon_assign(pxs, pys, offs, zxs, zys, out)
    return [int(v) for v in out]

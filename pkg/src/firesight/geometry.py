"""Geometry primitives on WGS84 coordinates.

Distances are great-circle (haversine) on a sphere of mean radius
6 371 008.8 m. Polygon predicates run in plain degree space: every polygon
this pipeline touches (fire footprints, county boundaries) spans far less
than a degree or two, so planar tests are exact enough while areas and
perimeters are still computed geodesically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_008.8
M_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0
ACRES_PER_M2 = 1.0 / 4046.8564224
MILES_PER_M = 1.0 / 1609.344

# absolute tolerance for on-boundary tests, in degrees (~0.1 um)
_EPS = 1e-12


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class Polygon:
    """Simple polygon given by a closed exterior ring (first == last vertex)."""

    exterior: tuple[GeoPoint, ...]

    def __post_init__(self):
        ring = self.exterior
        if len(ring) < 4 or ring[0] != ring[-1]:
            raise ValueError("exterior must be a closed ring with >= 3 distinct vertices")
        if len({(p.lat, p.lon) for p in ring[:-1]}) < 3:
            raise ValueError("ring needs >= 3 distinct vertices")
        if _planar_ring_area(ring) <= 0.0:
            raise ValueError("ring has zero planar area")

    @property
    def coords(self) -> tuple[GeoPoint, ...]:
        """Vertices without the closing duplicate."""
        return self.exterior[:-1]

    @classmethod
    def from_open_ring(cls, points: list[GeoPoint]) -> "Polygon":
        """Close and orient a vertex list counter-clockwise."""
        pts = list(points)
        if _shoelace(pts) < 0:
            pts.reverse()
        return cls(tuple(pts) + (pts[0],))


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def _shoelace(pts: list[GeoPoint]) -> float:
    """Signed planar area in degree^2 over an open ring (positive = CCW)."""
    s = 0.0
    n = len(pts)
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        s += a.lon * b.lat - b.lon * a.lat
    return s / 2.0


def _planar_ring_area(ring: tuple[GeoPoint, ...]) -> float:
    return abs(_shoelace(list(ring[:-1])))


def geodesic_area_m2(poly: Polygon) -> float:
    """Spherical-excess polygon area (Chamberlain & Duquette formulation)."""
    total = 0.0
    ring = poly.exterior
    for i in range(len(ring) - 1):
        lam1, phi1 = math.radians(ring[i].lon), math.radians(ring[i].lat)
        lam2, phi2 = math.radians(ring[i + 1].lon), math.radians(ring[i + 1].lat)
        total += (lam2 - lam1) * (2.0 + math.sin(phi1) + math.sin(phi2))
    return abs(total) * EARTH_RADIUS_M * EARTH_RADIUS_M / 2.0


def geodesic_perimeter_m(poly: Polygon) -> float:
    ring = poly.exterior
    return math.fsum(haversine_m(ring[i], ring[i + 1]) for i in range(len(ring) - 1))


def bbox_of(poly: Polygon) -> tuple[float, float, float, float]:
    """(min_lat, min_lon, max_lat, max_lon)."""
    lats = [p.lat for p in poly.coords]
    lons = [p.lon for p in poly.coords]
    return min(lats), min(lons), max(lats), max(lons)


def bboxes_overlap(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> bool:
    return not (a[2] < b[0] or b[2] < a[0] or a[3] < b[1] or b[3] < a[1])


def _on_segment(x: float, y: float, x1: float, y1: float, x2: float, y2: float) -> bool:
    cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
    if abs(cross) > _EPS:
        return False
    return (min(x1, x2) - _EPS <= x <= max(x1, x2) + _EPS
            and min(y1, y2) - _EPS <= y <= max(y1, y2) + _EPS)


def point_in_polygon(p: GeoPoint, poly: Polygon) -> bool:
    """Even-odd ray casting; points on the boundary count as inside."""
    x, y = p.lon, p.lat
    pts = poly.coords
    n = len(pts)
    inside = False
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        if _on_segment(x, y, a.lon, a.lat, b.lon, b.lat):
            return True
        if (a.lat > y) != (b.lat > y):
            x_hit = a.lon + (b.lon - a.lon) * (y - a.lat) / (b.lat - a.lat)
            if x < x_hit:
                inside = not inside
    return inside


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_intersect(p1: GeoPoint, p2: GeoPoint, q1: GeoPoint, q2: GeoPoint) -> bool:
    """True for proper crossings and for touching/collinear-overlap cases."""
    d1 = _orient(q1.lon, q1.lat, q2.lon, q2.lat, p1.lon, p1.lat)
    d2 = _orient(q1.lon, q1.lat, q2.lon, q2.lat, p2.lon, p2.lat)
    d3 = _orient(p1.lon, p1.lat, p2.lon, p2.lat, q1.lon, q1.lat)
    d4 = _orient(p1.lon, p1.lat, p2.lon, p2.lat, q2.lon, q2.lat)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True
    for (pt, a, b) in ((p1, q1, q2), (p2, q1, q2), (q1, p1, p2), (q2, p1, p2)):
        if _on_segment(pt.lon, pt.lat, a.lon, a.lat, b.lon, b.lat):
            return True
    return False


def polygons_intersect(a: Polygon, b: Polygon) -> bool:
    if not bboxes_overlap(bbox_of(a), bbox_of(b)):
        return False
    if any(point_in_polygon(p, b) for p in a.coords):
        return True
    if any(point_in_polygon(p, a) for p in b.coords):
        return True
    ar, br = a.coords, b.coords
    for i in range(len(ar)):
        a1, a2 = ar[i], ar[(i + 1) % len(ar)]
        for j in range(len(br)):
            if segments_intersect(a1, a2, br[j], br[(j + 1) % len(br)]):
                return True
    return False


class LocalFrame:
    """Equirectangular meters frame around a reference point.

    Only valid for geometry spanning well under a degree, which covers all
    footprint construction and nearest-feature distance work here.
    """

    def __init__(self, origin: GeoPoint):
        self.origin = origin
        self._coslat = math.cos(math.radians(origin.lat))

    def to_xy(self, p: GeoPoint) -> tuple[float, float]:
        x = (p.lon - self.origin.lon) * M_PER_DEG_LAT * self._coslat
        y = (p.lat - self.origin.lat) * M_PER_DEG_LAT
        return x, y

    def to_point(self, x: float, y: float) -> GeoPoint:
        lon = self.origin.lon + x / (M_PER_DEG_LAT * self._coslat)
        lat = self.origin.lat + y / M_PER_DEG_LAT
        return GeoPoint(lat, lon)


def _point_segment_distance(px, py, x1, y1, x2, y2) -> float:
    dx, dy = x2 - x1, y2 - y1
    if dx == 0 and dy == 0:
        return math.hypot(px - x1, py - y1)
    t = ((px - x1) * dx + (py - y1) * dy) / (dx * dx + dy * dy)
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (x1 + t * dx), py - (y1 + t * dy))


def polygon_min_distance_m(a: Polygon, b: Polygon) -> float:
    """Minimum separation between two polygons; 0 when they intersect."""
    if polygons_intersect(a, b):
        return 0.0
    abox, bbox = bbox_of(a), bbox_of(b)
    mid = GeoPoint((abox[0] + abox[2] + bbox[0] + bbox[2]) / 4.0,
                   (abox[1] + abox[3] + bbox[1] + bbox[3]) / 4.0)
    frame = LocalFrame(mid)
    axy = [frame.to_xy(p) for p in a.coords]
    bxy = [frame.to_xy(p) for p in b.coords]
    best = math.inf
    for pts, ring in ((axy, bxy), (bxy, axy)):
        n = len(ring)
        for (px, py) in pts:
            for i in range(n):
                x1, y1 = ring[i]
                x2, y2 = ring[(i + 1) % n]
                best = min(best, _point_segment_distance(px, py, x1, y1, x2, y2))
    return best


def convex_hull(points: list[GeoPoint]) -> list[GeoPoint]:
    """Monotone-chain hull in (lon, lat) space, CCW, no closing duplicate.

    Collinear inputs collapse to the two extreme vertices (or one point).
    """
    uniq = sorted({(p.lon, p.lat) for p in points})
    if len(uniq) <= 2:
        return [GeoPoint(lat, lon) for lon, lat in uniq]

    def build(seq):
        out: list[tuple[float, float]] = []
        for pt in seq:
            while len(out) >= 2 and _orient(out[-2][0], out[-2][1], out[-1][0], out[-1][1], pt[0], pt[1]) <= 0:
                out.pop()
            out.append(pt)
        return out

    lower = build(uniq)
    upper = build(reversed(uniq))
    ring = lower[:-1] + upper[:-1]
    return [GeoPoint(lat, lon) for lon, lat in ring]

"""Per-day hotspot normalization: density clustering and polygonal footprints.

Clustering is DBSCAN over great-circle distance (default radius 3 km,
MinPts 3). The partition is made canonical so it does not depend on input
order: clusters are the connected components of the core-point graph, and a
border point joins the component of its nearest core neighbor (distance ties
broken by the core's coordinate key). Cluster ids are then assigned in
ascending order of each cluster's lowest input index.

Degenerate geometries get buffers sized to the 375 m detection pixel: a
regular 16-gon for a single (or fully coincident) point and a square-capped
rectangle along the extent for two-point or collinear clusters.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .geometry import (
    ACRES_PER_M2,
    EARTH_RADIUS_M,
    GeoPoint,
    LocalFrame,
    Polygon,
    convex_hull,
    geodesic_area_m2,
)
from .ingest import Hotspot

DEFAULT_EPS_M = 3000.0
DEFAULT_MIN_PTS = 3
PIXEL_RADIUS_M = 375.0  # VIIRS detection pixel half-width
CIRCLE_SIDES = 16


@dataclass(frozen=True)
class Cluster:
    cluster_id: int
    members: tuple[Hotspot, ...]
    centroid: GeoPoint
    footprint: Polygon
    area_acres: float

    def __post_init__(self):
        if not self.members:
            raise ValueError("cluster has no members")
        if self.area_acres <= 0:
            raise ValueError("cluster footprint has no area")


@dataclass(frozen=True)
class EventDayGeometry:
    date: dt.date
    clusters: tuple[Cluster, ...]
    noise_points: tuple[Hotspot, ...]


def _pairwise_within(lat_deg: np.ndarray, lon_deg: np.ndarray,
                     eps_m: float) -> tuple[np.ndarray, np.ndarray]:
    """(adjacency, distance) matrices: haversine distance <= eps (self included)."""
    lat = np.radians(lat_deg)[:, None]
    lon = np.radians(lon_deg)[:, None]
    dphi = lat - lat.T
    dlam = lon - lon.T
    h = np.sin(dphi / 2.0) ** 2 + np.cos(lat) * np.cos(lat.T) * np.sin(dlam / 2.0) ** 2
    d = 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))
    return d <= eps_m, d


def dbscan_indices(points: list[tuple[float, float]], eps_m: float, min_pts: int,
                   tie_keys: list[tuple] | None = None) -> tuple[list[list[int]], list[int]]:
    """DBSCAN on (lat, lon) pairs; returns (clusters of indices, noise indices).

    ``tie_keys`` resolves equal-distance border attachment deterministically;
    defaults to the coordinates themselves.
    """
    n = len(points)
    if n == 0:
        return [], []
    if eps_m <= 0 or min_pts < 1:
        raise PreconditionError("eps_m must be > 0 and min_pts >= 1")
    if tie_keys is None:
        tie_keys = [tuple(p) for p in points]

    lat = np.array([p[0] for p in points], dtype=float)
    lon = np.array([p[1] for p in points], dtype=float)
    within, dist = _pairwise_within(lat, lon, eps_m)
    degree = within.sum(axis=1)
    is_core = degree >= min_pts

    # connected components over core-core adjacency
    comp = [-1] * n
    n_comp = 0
    for seed in range(n):
        if not is_core[seed] or comp[seed] != -1:
            continue
        stack = [seed]
        comp[seed] = n_comp
        while stack:
            i = stack.pop()
            for j in np.nonzero(within[i])[0]:
                if is_core[j] and comp[j] == -1:
                    comp[j] = n_comp
                    stack.append(int(j))
        n_comp += 1

    # border points join the component of their nearest core neighbor
    noise: list[int] = []
    for i in range(n):
        if is_core[i]:
            continue
        cores = [int(j) for j in np.nonzero(within[i])[0] if is_core[j]]
        if not cores:
            noise.append(i)
            continue
        best = min(cores, key=lambda j: (dist[i, j], tie_keys[j]))
        comp[i] = comp[best]

    groups: dict[int, list[int]] = {}
    for i in range(n):
        if comp[i] != -1:
            groups.setdefault(comp[i], []).append(i)
    clusters = sorted(groups.values(), key=min)
    return clusters, noise


def cluster_hotspots(hotspots: list[Hotspot], eps_m: float = DEFAULT_EPS_M,
                     min_pts: int = DEFAULT_MIN_PTS) -> tuple[list[list[Hotspot]], list[Hotspot]]:
    coords = [(h.lat, h.lon) for h in hotspots]
    keys = [h.sort_key() for h in hotspots]
    clusters_idx, noise_idx = dbscan_indices(coords, eps_m, min_pts, tie_keys=keys)
    clusters = [[hotspots[i] for i in idxs] for idxs in clusters_idx]
    noise = [hotspots[i] for i in noise_idx]
    return clusters, noise


def frp_weighted_centroid(members: list[Hotspot]) -> GeoPoint:
    """FRP-weighted planar mean of member coordinates (unweighted if FRP sums to 0)."""
    if not members:
        raise PreconditionError("centroid of an empty member list")
    total = math.fsum(h.frp for h in members)
    if total > 0:
        lat = math.fsum(h.frp * h.lat for h in members) / total
        lon = math.fsum(h.frp * h.lon for h in members) / total
    else:
        lat = math.fsum(h.lat for h in members) / len(members)
        lon = math.fsum(h.lon for h in members) / len(members)
    return GeoPoint(lat, lon)


def _circle_polygon(center: GeoPoint, radius_m: float) -> Polygon:
    frame = LocalFrame(center)
    ring = []
    for k in range(CIRCLE_SIDES):
        theta = 2.0 * math.pi * k / CIRCLE_SIDES
        ring.append(frame.to_point(radius_m * math.cos(theta), radius_m * math.sin(theta)))
    return Polygon.from_open_ring(ring)


def _segment_buffer(a: GeoPoint, b: GeoPoint, half_width_m: float) -> Polygon:
    """Square-capped rectangle of the given half-width around segment a-b."""
    frame = LocalFrame(GeoPoint((a.lat + b.lat) / 2.0, (a.lon + b.lon) / 2.0))
    ax, ay = frame.to_xy(a)
    bx, by = frame.to_xy(b)
    length = math.hypot(bx - ax, by - ay)
    ux, uy = (bx - ax) / length, (by - ay) / length
    nx, ny = -uy, ux
    w = half_width_m
    corners = [
        (ax - ux * w + nx * w, ay - uy * w + ny * w),
        (bx + ux * w + nx * w, by + uy * w + ny * w),
        (bx + ux * w - nx * w, by + uy * w - ny * w),
        (ax - ux * w - nx * w, ay - uy * w - ny * w),
    ]
    return Polygon.from_open_ring([frame.to_point(x, y) for x, y in corners])


def footprint_polygon(members: list[Hotspot]) -> Polygon:
    """Convex hull of the members, or a pixel-sized buffer when degenerate."""
    if not members:
        raise PreconditionError("footprint of an empty member list")
    points = [GeoPoint(h.lat, h.lon) for h in members]
    hull = convex_hull(points)
    if len(hull) >= 3:
        return Polygon.from_open_ring(hull)
    if len(hull) == 2:
        # two distinct points, or >= 3 collinear: buffer the full extent
        ends = max(((p, q) for p in hull for q in hull),
                   key=lambda pq: (pq[0].lat - pq[1].lat) ** 2 + (pq[0].lon - pq[1].lon) ** 2)
        return _segment_buffer(ends[0], ends[1], PIXEL_RADIUS_M)
    return _circle_polygon(frp_weighted_centroid(members), PIXEL_RADIUS_M)


def normalize_event_day(date: dt.date, hotspots: list[Hotspot],
                        eps_m: float = DEFAULT_EPS_M,
                        min_pts: int = DEFAULT_MIN_PTS) -> EventDayGeometry:
    for h in hotspots:
        if h.acq_date != date:
            raise PreconditionError(f"hotspot dated {h.acq_date} in event day {date}")
    raw_clusters, noise = cluster_hotspots(hotspots, eps_m, min_pts)
    clusters = []
    for cid, members in enumerate(raw_clusters):
        poly = footprint_polygon(members)
        clusters.append(Cluster(
            cluster_id=cid,
            members=tuple(members),
            centroid=frp_weighted_centroid(members),
            footprint=poly,
            area_acres=geodesic_area_m2(poly) * ACRES_PER_M2,
        ))
    return EventDayGeometry(date=date, clusters=tuple(clusters), noise_points=tuple(noise))


def geometry_to_geojson(day: EventDayGeometry) -> str:
    """Inspection GeoJSON: one Polygon feature per cluster."""
    features = []
    for c in day.clusters:
        ring = [[p.lon, p.lat] for p in c.footprint.exterior]
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [ring]},
            "properties": {
                "cluster_id": c.cluster_id,
                "point_count": len(c.members),
                "sum_frp": round(math.fsum(h.frp for h in c.members), 4),
                "area_acres": round(c.area_acres, 4),
            },
        })
    doc = {
        "type": "FeatureCollection",
        "date": day.date.isoformat(),
        "noise_count": len(day.noise_points),
        "features": features,
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"

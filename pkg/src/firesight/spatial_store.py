"""Embedded spatial query engine: nearest-k, containment joins, zonal stats.

Everything here is defined by its linear-scan / per-cell brute-force
counterpart; the bounding-box index and window clipping are optimizations
that must never change a result. Zonal statistics use the cell-center rule
with a boundary-inclusive point-in-polygon test so cells on shared edges are
never dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import FormatError, ConflictError, PreconditionError
from .geometry import (
    GeoPoint,
    M_PER_DEG_LAT,
    Polygon,
    bbox_of,
    bboxes_overlap,
    haversine_m,
    point_in_polygon,
    polygon_min_distance_m,
    polygons_intersect,
)
from .ingest import FireStation, RasterGrid

# re-exported names: this module is the query surface for geometry predicates
geodesic_distance = haversine_m

DEFAULT_NEAREST_K = 3

Bbox = tuple[float, float, float, float]  # (min_lat, min_lon, max_lat, max_lon)


@dataclass(frozen=True)
class CountyFeature:
    county_id: str
    name: str
    boundary: Polygon
    population: float = 0.0

    def __post_init__(self):
        if self.population < 0:
            raise ValueError(f"county {self.county_id}: negative population")


class SpatialIndex:
    """Static STR-packed bbox tree.

    ``query(bbox)`` returns exactly the items whose bounding box overlaps
    the query box, in insertion order -- identical to a linear scan.
    """

    def __init__(self, items: list, bboxes: list[Bbox], leaf_size: int = 8):
        if len(items) != len(bboxes):
            raise ValueError("items and bboxes length mismatch")
        self.items = list(items)
        self._leaf_size = leaf_size
        entries = [(bb, i) for i, bb in enumerate(bboxes)]
        self._root = self._build(entries) if entries else None

    def _build(self, entries):
        if len(entries) <= self._leaf_size:
            bb = _union_bbox([e[0] for e in entries])
            return ("leaf", bb, entries)
        entries = sorted(entries, key=lambda e: (e[0][1] + e[0][3], e[0][0] + e[0][2]))
        n_slices = max(1, round(len(entries) ** 0.5 / self._leaf_size ** 0.5))
        per = -(-len(entries) // n_slices)
        children = []
        for s in range(0, len(entries), per):
            strip = sorted(entries[s:s + per], key=lambda e: (e[0][0] + e[0][2], e[0][1] + e[0][3]))
            for t in range(0, len(strip), self._leaf_size):
                chunk = strip[t:t + self._leaf_size]
                children.append(("leaf", _union_bbox([e[0] for e in chunk]), chunk))
        while len(children) > self._leaf_size:
            parents = []
            for t in range(0, len(children), self._leaf_size):
                group = children[t:t + self._leaf_size]
                parents.append(("node", _union_bbox([g[1] for g in group]), group))
            children = parents
        return ("node", _union_bbox([c[1] for c in children]), children)

    def query(self, bbox: Bbox) -> list:
        if self._root is None:
            return []
        hits: list[int] = []
        stack = [self._root]
        while stack:
            kind, bb, payload = stack.pop()
            if not bboxes_overlap(bb, bbox):
                continue
            if kind == "leaf":
                hits.extend(i for ebb, i in payload if bboxes_overlap(ebb, bbox))
            else:
                stack.extend(payload)
        hits.sort()
        return [self.items[i] for i in hits]


def _union_bbox(boxes: list[Bbox]) -> Bbox:
    return (min(b[0] for b in boxes), min(b[1] for b in boxes),
            max(b[2] for b in boxes), max(b[3] for b in boxes))


def station_index(stations: list[FireStation]) -> SpatialIndex:
    return SpatialIndex(stations, [(s.lat, s.lon, s.lat, s.lon) for s in stations])


def county_index(counties: list[CountyFeature]) -> SpatialIndex:
    return SpatialIndex(counties, [bbox_of(c.boundary) for c in counties])


# ---------------------------------------------------------------------------
# point queries


def nearest_stations(p: GeoPoint, stations: list[FireStation],
                     k: int = DEFAULT_NEAREST_K) -> list[tuple[FireStation, float]]:
    """k nearest stations by great-circle distance, ties broken by id."""
    if k < 1:
        raise PreconditionError("k must be >= 1")
    ranked = sorted(((haversine_m(p, s), s.id, s) for s in stations),
                    key=lambda t: (t[0], t[1]))
    return [(s, d) for d, _, s in ranked[:k]]


def stations_within_ids(p: GeoPoint, stations: list[FireStation], radius_m: float) -> list[str]:
    if radius_m <= 0:
        raise PreconditionError("radius must be positive")
    # latitude-band prefilter; meridian separation lower-bounds the distance
    # (1 mm slack so borderline candidates still reach the exact test)
    ids = []
    for s in stations:
        if abs(s.lat - p.lat) * M_PER_DEG_LAT > radius_m + 1e-3:
            continue
        if haversine_m(p, s) <= radius_m:
            ids.append(s.id)
    return sorted(ids)


def stations_within(p: GeoPoint, stations: list[FireStation], radius_m: float) -> int:
    """Count of stations within radius (inclusive)."""
    return len(stations_within_ids(p, stations, radius_m))


# ---------------------------------------------------------------------------
# zonal statistics


@dataclass(frozen=True)
class ZonalSum:
    total: float
    covered_cells: int

    @property
    def coverage_warning(self) -> bool:
        return self.covered_cells == 0


@dataclass(frozen=True)
class ZonalComposition:
    proportions: dict[int, float] = field(default_factory=dict)
    covered_cells: int = 0

    @property
    def coverage_warning(self) -> bool:
        return self.covered_cells == 0


def iter_covered_cells(r: RasterGrid, poly: Polygon):
    """Yield (row, col, value) for non-nodata cells whose center lies in poly."""
    min_lat, min_lon, max_lat, max_lon = bbox_of(poly)
    cs = r.cell_size_deg
    row_lo = max(0, int((r.origin_lat - max_lat) / cs) - 1)
    row_hi = min(r.n_rows, int((r.origin_lat - min_lat) / cs) + 2)
    col_lo = max(0, int((min_lon - r.origin_lon) / cs) - 1)
    col_hi = min(r.n_cols, int((max_lon - r.origin_lon) / cs) + 2)
    for row in range(row_lo, row_hi):
        for col in range(col_lo, col_hi):
            v = r.value(row, col)
            if r.is_nodata(v):
                continue
            lat, lon = r.cell_center(row, col)
            if point_in_polygon(GeoPoint(lat, lon), poly):
                yield row, col, v


def zonal_sum(r: RasterGrid, poly: Polygon) -> ZonalSum:
    total = 0.0
    covered = 0
    for _, _, v in iter_covered_cells(r, poly):
        total += v
        covered += 1
    return ZonalSum(total=total, covered_cells=covered)


def zonal_composition(r: RasterGrid, poly: Polygon) -> ZonalComposition:
    counts: dict[int, int] = {}
    covered = 0
    for _, _, v in iter_covered_cells(r, poly):
        counts[int(round(v))] = counts.get(int(round(v)), 0) + 1
        covered += 1
    if covered == 0:
        return ZonalComposition()
    return ZonalComposition(
        proportions={cls: n / covered for cls, n in sorted(counts.items())},
        covered_cells=covered,
    )


# ---------------------------------------------------------------------------
# county joins


def counties_intersecting(poly: Polygon, counties: list[CountyFeature] | SpatialIndex,
                          buffer_km: float = 0.0) -> list[CountyFeature]:
    """Counties whose boundary intersects poly (optionally within a buffer)."""
    pbox = bbox_of(poly)
    if buffer_km > 0:
        pad = buffer_km * 1000.0 / M_PER_DEG_LAT * 2.0  # generous degree pad
        pbox = (pbox[0] - pad, pbox[1] - pad, pbox[2] + pad, pbox[3] + pad)
    if isinstance(counties, SpatialIndex):
        candidates = counties.query(pbox)
    else:
        candidates = [c for c in counties if bboxes_overlap(bbox_of(c.boundary), pbox)]
    hits = []
    for county in candidates:
        if buffer_km > 0:
            ok = polygon_min_distance_m(poly, county.boundary) <= buffer_km * 1000.0
        else:
            ok = polygons_intersect(poly, county.boundary)
        if ok:
            hits.append(county)
    return sorted(hits, key=lambda c: c.county_id)


def load_counties(stream) -> list[CountyFeature]:
    """GeoJSON FeatureCollection of Polygon features with county properties."""
    try:
        doc = json.load(stream)
    except json.JSONDecodeError as exc:
        raise FormatError(f"county GeoJSON is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise FormatError("county document is not a GeoJSON FeatureCollection")
    out: list[CountyFeature] = []
    seen: set[str] = set()
    for i, feature in enumerate(doc.get("features", [])):
        geom = feature.get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise FormatError(f"county feature {i}: expected Polygon, got {geom.get('type')!r}")
        try:
            ring = [GeoPoint(lat, lon) for lon, lat in geom["coordinates"][0]]
            props = feature.get("properties") or {}
            county = CountyFeature(
                county_id=str(props["county_id"]),
                name=str(props.get("name", "")),
                boundary=Polygon(tuple(ring)) if ring[0] == ring[-1] else Polygon.from_open_ring(ring),
                population=float(props.get("population", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"county feature {i}: {exc}") from exc
        if county.county_id in seen:
            raise ConflictError(f"duplicate county_id {county.county_id!r}")
        seen.add(county.county_id)
        out.append(county)
    return out


def write_counties(counties: list[CountyFeature], stream) -> None:
    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "geometry": {"type": "Polygon",
                             "coordinates": [[[p.lon, p.lat] for p in c.boundary.exterior]]},
                "properties": {"county_id": c.county_id, "name": c.name,
                               "population": c.population},
            }
            for c in counties
        ],
    }
    json.dump(doc, stream, indent=1)
    stream.write("\n")

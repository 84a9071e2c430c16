"""Per-cluster evidence retrieval: terrain, weather, exposure, station access.

Land-cover class codes are grouped into spread-risk tiers by a swappable
mapping (see DEFAULT_LANDCOVER_RISK; a JSON file of ``code -> tier`` can
replace it). The spread-potential score is the composition-weighted mean of
the tier risk values, so it always lands in [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import FormatError, PreconditionError
from .geometry import GeoPoint, Polygon, geodesic_area_m2
from .ingest import Hotspot, RasterGrid, WeatherDayGrids, FireStation, WEATHER_VARS
from .spatial_store import (
    CountyFeature,
    DEFAULT_NEAREST_K,
    counties_intersecting,
    iter_covered_cells,
    nearest_stations,
    stations_within_ids,
    zonal_composition,
    zonal_sum,
)

# NLCD-style code -> risk tier. Forest/shrub carry fire readily; grass and
# crops moderately; low-intensity development weakly; water, ice, dense
# development and barren ground act as barriers. Codes missing from the
# mapping count as unclassified mass with zero spread contribution.
DEFAULT_LANDCOVER_RISK: dict[int, str] = {
    41: "high", 42: "high", 43: "high", 52: "high",
    71: "medium", 81: "medium", 82: "medium",
    21: "low", 22: "low",
    11: "barrier", 12: "barrier", 23: "barrier", 24: "barrier", 31: "barrier",
}

RISK_VALUES = {"high": 1.0, "medium": 0.6, "low": 0.3, "barrier": 0.0}

STATION_DENSITY_RADIUS_M = 10_000.0


def load_landcover_risk(stream) -> dict[int, str]:
    """Read a ``{"code": "tier"}`` JSON mapping."""
    try:
        raw = json.load(stream)
    except json.JSONDecodeError as exc:
        raise FormatError(f"land-cover mapping is not valid JSON: {exc}") from exc
    mapping: dict[int, str] = {}
    for code, tier in raw.items():
        if tier not in RISK_VALUES:
            raise FormatError(f"unknown risk tier {tier!r} for class {code}")
        mapping[int(code)] = tier
    return mapping


@dataclass(frozen=True)
class TerrainProfile:
    composition: dict[int, float] = field(default_factory=dict)
    shannon_diversity: float | None = None
    fragmentation: float | None = None
    risk_fractions: dict[str, float] = field(default_factory=dict)
    continuous_fuels: float | None = None
    barriers: float | None = None
    spread_potential: float | None = None

    @property
    def is_na(self) -> bool:
        return not self.composition


@dataclass(frozen=True)
class FusedWeather:
    bi: float | None = None
    tmax: float | None = None
    tmin: float | None = None
    wind: float | None = None
    fm1: float | None = None

    def __post_init__(self):
        if self.tmax is not None and self.tmin is not None and self.tmax < self.tmin:
            raise ValueError(f"tmax {self.tmax} < tmin {self.tmin}")
        if self.wind is not None and self.wind < 0:
            raise ValueError(f"negative wind {self.wind}")
        if self.fm1 is not None and not (0.0 <= self.fm1 <= 100.0):
            raise ValueError(f"FM1 outside percent range: {self.fm1}")

    def get(self, var: str) -> float | None:
        return getattr(self, var)


@dataclass(frozen=True)
class ExposureProfile:
    """Exposure evidence; population/density are None when no raster covers the footprint."""

    population: float | None
    density: float | None  # persons per km^2
    counties: tuple[str, ...]
    coverage_warning: bool = False

    def __post_init__(self):
        if (self.population is not None and self.population < 0) or \
           (self.density is not None and self.density < 0):
            raise ValueError("negative exposure")


@dataclass(frozen=True)
class StationCoverage:
    nearest: tuple[tuple[str, float], ...]  # (station_id, meters), ascending
    density_10km: int
    ids_10km: tuple[str, ...] = ()

    def __post_init__(self):
        dists = [d for _, d in self.nearest]
        if dists != sorted(dists):
            raise ValueError("nearest stations not sorted by distance")


def shannon_diversity(composition: dict) -> float:
    """H = -sum(p * ln p) over positive proportions, in nats."""
    total = 0.0
    for p in composition.values():
        if p < 0 or p > 1:
            raise PreconditionError(f"proportion outside [0, 1]: {p}")
        total += p
    if total > 1.0 + 1e-9:
        raise PreconditionError(f"proportions sum to {total} > 1")
    return -math.fsum(p * math.log(p) for p in composition.values() if p > 0)


def _patch_count(cells: dict[tuple[int, int], int]) -> int:
    """4-connected same-class patches over the covered cell set."""
    seen: set[tuple[int, int]] = set()
    patches = 0
    for start in sorted(cells):
        if start in seen:
            continue
        patches += 1
        cls = cells[start]
        stack = [start]
        seen.add(start)
        while stack:
            r, c = stack.pop()
            for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if nb not in seen and cells.get(nb) == cls:
                    seen.add(nb)
                    stack.append(nb)
    return patches


def classify_composition(composition: dict[int, float],
                         mapping: dict[int, str] | None = None
                         ) -> tuple[dict[str, float], float, float]:
    """(risk_fractions, barrier mass, spread score) for a class composition.

    Spread is the composition-weighted mean of tier risk values; unmapped
    classes contribute zero spread but keep their mass.
    """
    mapping = DEFAULT_LANDCOVER_RISK if mapping is None else mapping
    risk = {"high": 0.0, "medium": 0.0, "low": 0.0}
    barrier_mass = 0.0
    spread = 0.0
    for cls, p in composition.items():
        tier = mapping.get(cls)
        if tier in risk:
            risk[tier] += p
        elif tier == "barrier":
            barrier_mass += p
        spread += p * RISK_VALUES.get(tier, 0.0)
    return risk, barrier_mass, spread


def terrain_profile(r: RasterGrid, poly: Polygon,
                    risk_mapping: dict[int, str] | None = None) -> TerrainProfile:
    comp = zonal_composition(r, poly)
    if comp.coverage_warning:
        return TerrainProfile()
    risk, barrier_mass, spread = classify_composition(comp.proportions, risk_mapping)
    cells = {(row, col): int(round(v)) for row, col, v in iter_covered_cells(r, poly)}
    return TerrainProfile(
        composition=comp.proportions,
        shannon_diversity=shannon_diversity(comp.proportions),
        fragmentation=_patch_count(cells) / comp.covered_cells,
        risk_fractions=risk,
        continuous_fuels=risk["high"] + risk["medium"],
        barriers=barrier_mass,
        spread_potential=spread,
    )


def _weighted_field_mean(samples: list[float], weights: list[float]) -> float:
    wsum = math.fsum(weights)
    if wsum > 0:
        return math.fsum(w * v for w, v in zip(weights, samples)) / wsum
    return math.fsum(samples) / len(samples)


def weather_fusion_partial(members: list[Hotspot],
                           grids: dict[str, RasterGrid]) -> FusedWeather:
    """Weather fusion over whichever variable grids are available."""
    if not members:
        raise PreconditionError("weather fusion over an empty member list")
    fused: dict[str, float | None] = {}
    for var in WEATHER_VARS:
        grid = grids.get(var)
        if grid is None:
            fused[var] = None
            continue
        samples: list[float] = []
        weights: list[float] = []
        for h in members:
            cell = grid.cell_of(h.lat, h.lon)
            if cell is None:
                continue
            v = grid.value(*cell)
            if grid.is_nodata(v):
                continue
            samples.append(v)
            weights.append(h.frp)
        fused[var] = _weighted_field_mean(samples, weights) if samples else None
    return FusedWeather(**fused)


def weather_fusion(members: list[Hotspot], w: WeatherDayGrids) -> FusedWeather:
    """FRP-weighted mean of each weather field sampled at hotspot cells.

    Hotspots landing on nodata cells (or off-grid) are excluded from that
    field's average; a field with no valid sample comes back as None.
    """
    return weather_fusion_partial(members, {var: w.grid(var) for var in WEATHER_VARS})


def exposure(poly: Polygon, pop: RasterGrid,
             counties: list[CountyFeature]) -> ExposureProfile:
    zs = zonal_sum(pop, poly)
    area_km2 = geodesic_area_m2(poly) / 1e6
    hit = counties_intersecting(poly, counties)
    return ExposureProfile(
        population=zs.total,
        density=zs.total / area_km2,
        counties=tuple(c.county_id for c in hit),
        coverage_warning=zs.coverage_warning,
    )


def station_coverage(centroid: GeoPoint, stations: list[FireStation],
                     k: int = DEFAULT_NEAREST_K,
                     density_radius_m: float = STATION_DENSITY_RADIUS_M) -> StationCoverage:
    nearest = nearest_stations(centroid, stations, k=k) if stations else []
    ids = tuple(stations_within_ids(centroid, stations, density_radius_m)) if stations else ()
    return StationCoverage(
        nearest=tuple((s.id, d) for s, d in nearest),
        density_10km=len(ids),
        ids_10km=ids,
    )

import math
import random

import pytest
from hypothesis import given, strategies as st

from firesight.errors import PreconditionError
from firesight.enrichment import (
    classify_composition,
    exposure,
    shannon_diversity,
    station_coverage,
    terrain_profile,
    weather_fusion,
)
from firesight.geometry import GeoPoint, Polygon, geodesic_area_m2
from firesight.ingest import FireStation, RasterGrid, WeatherDayGrids
from firesight.spatial_store import CountyFeature, geodesic_distance

from conftest import make_hotspot
from oracles import flood_patches, planar_area_m2

import datetime as dt


def square(lat_lo, lon_lo, size):
    return Polygon.from_open_ring([
        GeoPoint(lat_lo, lon_lo), GeoPoint(lat_lo, lon_lo + size),
        GeoPoint(lat_lo + size, lon_lo + size), GeoPoint(lat_lo + size, lon_lo),
    ])


def grid_of(values, rows, cols, cell=0.1):
    return RasterGrid(37.0, -122.0, cell, rows, cols, tuple(values))


COVER_ALL = square(36.55, -122.05, 0.5)  # covers a 4x4 grid with cell 0.1


# --- shannon diversity


def test_shannon_single_class_is_zero():
    assert shannon_diversity({41: 1.0}) == 0.0


def test_shannon_two_even_classes():
    assert shannon_diversity({41: 0.5, 11: 0.5}) == pytest.approx(math.log(2), abs=1e-12)


def test_shannon_skewed_mix():
    assert shannon_diversity({1: 0.7, 2: 0.2, 3: 0.1}) == pytest.approx(0.8018185525433372, abs=1e-6)


def test_shannon_uniform_maximizes():
    for n in (2, 3, 5, 10, 25):
        comp = {i: 1.0 / n for i in range(n)}
        assert shannon_diversity(comp) == pytest.approx(math.log(n), abs=1e-12)


def test_shannon_rejects_bad_proportions():
    with pytest.raises(PreconditionError):
        shannon_diversity({1: 0.9, 2: 0.9})
    with pytest.raises(PreconditionError):
        shannon_diversity({1: -0.1})


# --- terrain


def test_terrain_all_evergreen():
    g = grid_of([42.0] * 16, 4, 4)
    t = terrain_profile(g, COVER_ALL)
    assert t.spread_potential == pytest.approx(1.0)
    assert t.risk_fractions["high"] == pytest.approx(1.0)
    assert t.continuous_fuels == pytest.approx(1.0)
    assert t.fragmentation == pytest.approx(1.0 / 16)  # one patch over 16 cells
    assert t.shannon_diversity == 0.0


def test_terrain_open_water_is_barrier():
    g = grid_of([11.0] * 16, 4, 4)
    t = terrain_profile(g, COVER_ALL)
    assert t.spread_potential == 0.0
    assert t.barriers == pytest.approx(1.0)
    assert t.continuous_fuels == 0.0


def test_terrain_checkerboard_fragmentation():
    values = [41.0 if (r + c) % 2 == 0 else 71.0 for r in range(4) for c in range(4)]
    g = grid_of(values, 4, 4)
    t = terrain_profile(g, COVER_ALL)
    cells = {(r, c): int(values[r * 4 + c]) for r in range(4) for c in range(4)}
    assert t.fragmentation == flood_patches(cells) / 16 == 1.0


def test_terrain_fragmentation_matches_flood_fill_random():
    rng = random.Random(31)
    for _ in range(20):
        values = [float(rng.choice([41, 42, 71, 11])) for _ in range(36)]
        g = grid_of(values, 6, 6)
        poly = square(36.35, -122.05, 0.7)
        t = terrain_profile(g, poly)
        cells = {(r, c): int(values[r * 6 + c]) for r in range(6) for c in range(6)}
        assert t.fragmentation == pytest.approx(flood_patches(cells) / 36)


def test_terrain_empty_coverage_is_na():
    g = grid_of([42.0] * 4, 2, 2)
    t = terrain_profile(g, square(10.0, 10.0, 0.2))
    assert t.is_na and t.spread_potential is None


def test_risk_masses_partition_composition():
    comp = {42: 0.4, 71: 0.2, 21: 0.1, 11: 0.2, 90: 0.1}  # 90 unmapped
    risk, barriers, spread = classify_composition(comp)
    vegetated = risk["high"] + risk["medium"] + risk["low"]
    assert vegetated == pytest.approx(0.7, abs=1e-9)
    assert vegetated + barriers + 0.1 == pytest.approx(1.0, abs=1e-9)
    assert spread == pytest.approx(0.4 * 1.0 + 0.2 * 0.6 + 0.1 * 0.3, abs=1e-12)


@given(st.dictionaries(st.sampled_from([11, 21, 22, 41, 42, 43, 52, 71, 81, 82, 90, 95]),
                       st.floats(0.001, 1.0), min_size=1, max_size=8))
def test_spread_potential_bounded(raw):
    total = sum(raw.values())
    comp = {k: v / total for k, v in raw.items()}
    _, _, spread = classify_composition(comp)
    assert -1e-12 <= spread <= 1.0 + 1e-12


# --- weather fusion


def _weather(bi, tmax=None, tmin=None, wind=None, fm1=None):
    today = dt.date(2020, 8, 17)
    def g(vals):
        return RasterGrid(37.0, -122.0, 0.1, 2, 2, tuple(vals))
    return WeatherDayGrids(
        date=today,
        bi=g(bi),
        tmax=g(tmax or [305.0] * 4),
        tmin=g(tmin or [288.0] * 4),
        wind=g(wind or [4.0] * 4),
        fm1=g(fm1 or [8.0] * 4),
    )


def test_fusion_uniform_grid_ignores_weights():
    w = _weather([40.0] * 4)
    members = [make_hotspot(36.95, -121.95, frp=1.0), make_hotspot(36.85, -121.85, frp=9.0)]
    assert weather_fusion(members, w).bi == 40.0


def test_fusion_weighted_mean():
    # cells: row 0 -> 30, row 1 -> 50; hotspot frp 1 on row 0, frp 3 on row 1
    w = _weather([30.0, 30.0, 50.0, 50.0])
    members = [make_hotspot(36.95, -121.95, frp=1.0), make_hotspot(36.85, -121.95, frp=3.0)]
    assert weather_fusion(members, w).bi == pytest.approx(45.0)


def test_fusion_all_zero_frp_uniform_weights():
    w = _weather([30.0, 30.0, 50.0, 50.0])
    members = [make_hotspot(36.95, -121.95, frp=0.0), make_hotspot(36.85, -121.95, frp=0.0)]
    assert weather_fusion(members, w).bi == pytest.approx(40.0)


def test_fusion_excludes_nodata_per_field():
    # bi nodata under the frp=3 hotspot: only the frp=1 sample remains
    w = _weather([30.0, 30.0, -9999.0, 50.0])
    members = [make_hotspot(36.95, -121.95, frp=1.0), make_hotspot(36.85, -121.95, frp=3.0)]
    fused = weather_fusion(members, w)
    assert fused.bi == 30.0
    assert fused.wind == pytest.approx(4.0)


def test_fusion_all_nodata_gives_none():
    w = _weather([-9999.0] * 4)
    fused = weather_fusion([make_hotspot(36.95, -121.95, frp=2.0)], w)
    assert fused.bi is None and fused.tmax is not None


def test_fusion_scaling_weights_exact():
    w = _weather([31.0, 47.0, 50.0, 44.0])
    members = [make_hotspot(36.95, -121.95, frp=1.5), make_hotspot(36.85, -121.85, frp=6.25)]
    base = weather_fusion(members, w)
    scaled_members = [make_hotspot(h.lat, h.lon, frp=h.frp * 4.0) for h in members]
    scaled = weather_fusion(scaled_members, w)  # power-of-two scale: exact
    assert scaled == base


def test_fusion_order_invariant():
    w = _weather([31.0, 47.0, 50.0, 44.0])
    members = [make_hotspot(36.95, -121.95, frp=1.1), make_hotspot(36.85, -121.85, frp=3.3),
               make_hotspot(36.95, -121.85, frp=2.2)]
    assert weather_fusion(members, w) == weather_fusion(members[::-1], w)


# --- exposure


def test_exposure_population_and_counties():
    pop = grid_of([100.0] * 16, 4, 4)
    counties = [CountyFeature("only", "Only", square(36.0, -123.0, 2.0), 1000)]
    e = exposure(COVER_ALL, pop, counties)
    assert e.population == 1600.0
    assert e.counties == ("only",)
    area_km2 = geodesic_area_m2(COVER_ALL) / 1e6
    assert e.density == pytest.approx(1600.0 / area_km2)
    # independent area check: local planar shoelace
    oracle_area = planar_area_m2([(p.lat, p.lon) for p in COVER_ALL.coords]) / 1e6
    assert area_km2 == pytest.approx(oracle_area, rel=1e-3)


# --- station coverage


def test_station_coverage_empty():
    cov = station_coverage(GeoPoint(37.0, -122.0), [])
    assert cov.nearest == () and cov.density_10km == 0


def test_station_coverage_five_stations():
    rng = random.Random(41)
    stations = [FireStation(f"S{i}", 37.0 + rng.uniform(-0.3, 0.3),
                            -122.0 + rng.uniform(-0.3, 0.3)) for i in range(5)]
    cov = station_coverage(GeoPoint(37.0, -122.0), stations)
    assert len(cov.nearest) == 3
    dists = [d for _, d in cov.nearest]
    assert dists == sorted(dists)
    expect = sorted(geodesic_distance(GeoPoint(37.0, -122.0), GeoPoint(s.lat, s.lon))
                    for s in stations)[:3]
    assert dists == pytest.approx(expect)


def test_station_at_exactly_ten_km_counts():
    p = GeoPoint(37.0, -122.0)
    s = FireStation("edge", 37.0899321605918, -122.0)
    d = geodesic_distance(p, GeoPoint(s.lat, s.lon))
    cov = station_coverage(p, [s], density_radius_m=d)
    assert cov.density_10km == 1

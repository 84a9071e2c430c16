"""Deterministic synthetic dataset for demos and end-to-end tests.

Builds a self-contained data directory: three historical fires (the corpus),
two evaluation fires of ten days each, stations, counties, land-cover and
population rasters, daily weather grids, ground truth, and a ready-to-use
config file wired to the mock client. Everything derives from seeded RNGs
and closed-form fields, so two generations of the same seed are identical
byte for byte.
"""

from __future__ import annotations

import datetime as dt
import math
import random
from pathlib import Path

from .ingest import (
    FireStation,
    GroundTruthDay,
    Hotspot,
    RasterGrid,
    WEATHER_VARS,
    write_ground_truth,
    write_hotspots,
    write_raster,
    write_stations,
)
from .geometry import GeoPoint, Polygon
from .spatial_store import CountyFeature, write_counties

LAT_TOP, LON_LEFT = 37.5, -122.6
LC_CELL, LC_ROWS, LC_COLS = 0.02, 50, 60
WX_CELL, WX_ROWS, WX_COLS = 0.04, 25, 30

CORPUS_FIRES = {
    "ALPHA": (dt.date(2020, 8, 1), 9, 37.15, -122.35, ()),
    "BRAVO": (dt.date(2020, 8, 3), 8, 36.75, -121.70, ()),
    "CHARLIE": (dt.date(2020, 8, 12), 9, 37.30, -121.95, (4,)),
}
EVAL_FIRES = {
    "DELTA": (dt.date(2020, 8, 15), 10, 36.95, -122.25, (7,)),
    "ECHO": (dt.date(2020, 9, 1), 10, 37.05, -121.85, (3,)),
}


def _box(lat_lo, lon_lo, lat_hi, lon_hi) -> Polygon:
    return Polygon.from_open_ring([
        GeoPoint(lat_lo, lon_lo), GeoPoint(lat_lo, lon_hi),
        GeoPoint(lat_hi, lon_hi), GeoPoint(lat_hi, lon_lo),
    ])


def _counties() -> list[CountyFeature]:
    return [
        CountyFeature("Alta", "Alta County", _box(36.5, -122.6, 37.5, -122.1), 180_000),
        CountyFeature("Brook", "Brook County", _box(36.5, -122.1, 37.5, -121.8), 95_000),
        CountyFeature("Cedro", "Cedro County", _box(36.5, -121.8, 37.5, -121.4), 240_000),
    ]


def _stations(rng: random.Random) -> list[FireStation]:
    out = []
    for i in range(10):
        out.append(FireStation(
            id=f"FS{i + 1:02d}",
            lat=rng.uniform(36.55, 37.45),
            lon=rng.uniform(-122.55, -121.45),
            name=f"Station {i + 1}",
        ))
    return out


def _landcover(rng: random.Random) -> RasterGrid:
    codes = [11, 21, 22, 41, 42, 43, 52, 71, 81, 90]
    weights = [4, 5, 4, 16, 22, 10, 14, 12, 8, 5]
    values = []
    for _ in range(LC_ROWS * LC_COLS):
        if rng.random() < 0.02:
            values.append(-9999.0)
        else:
            values.append(float(rng.choices(codes, weights)[0]))
    return RasterGrid(LAT_TOP, LON_LEFT, LC_CELL, LC_ROWS, LC_COLS, tuple(values))


def _population(rng: random.Random) -> RasterGrid:
    towns = [(37.2, -122.15), (36.8, -121.6), (37.35, -121.9)]
    values = []
    for r in range(LC_ROWS):
        for c in range(LC_COLS):
            lat = LAT_TOP - (r + 0.5) * LC_CELL
            lon = LON_LEFT + (c + 0.5) * LC_CELL
            boost = sum(400.0 * math.exp(-((lat - tl) ** 2 + (lon - tn) ** 2) / 0.02)
                        for tl, tn in towns)
            if rng.random() < 0.01:
                values.append(-9999.0)
            else:
                values.append(round(rng.uniform(0, 30) + boost, 2))
    return RasterGrid(LAT_TOP, LON_LEFT, LC_CELL, LC_ROWS, LC_COLS, tuple(values))


def _weather_grid(var: str, date: dt.date) -> RasterGrid:
    """Closed-form daily field: smooth gradients plus a seasonal wobble."""
    day = date.toordinal()
    wobble = math.sin(2.0 * math.pi * day / 14.0)
    values = []
    for r in range(WX_ROWS):
        for c in range(WX_COLS):
            u, v = r / WX_ROWS, c / WX_COLS
            if var == "bi":
                x = 38.0 + 22.0 * u + 9.0 * wobble + 5.0 * math.sin(6.0 * v)
            elif var == "tmax":
                x = 303.0 + 8.0 * v + 3.0 * wobble + 2.0 * math.cos(5.0 * u)
            elif var == "tmin":
                x = 288.0 + 5.0 * v + 2.0 * wobble
            elif var == "wind":
                x = 3.5 + 3.0 * u + 1.5 * math.sin(4.0 * v + day)
                x = max(0.0, x)
            else:  # fm1
                x = 9.0 - 3.0 * u - 2.0 * wobble + math.sin(3.0 * v)
                x = min(100.0, max(0.5, x))
            values.append(round(x, 3))
    return RasterGrid(LAT_TOP, LON_LEFT, WX_CELL, WX_ROWS, WX_COLS, tuple(values))


def _fire_day_hotspots(rng: random.Random, date: dt.date, center: tuple[float, float],
                       activity: float) -> list[Hotspot]:
    n = max(3, round(4 + 20 * activity))
    k = 2 if n < 14 else 3
    subcenters = [(center[0] + rng.uniform(-0.05, 0.05),
                   center[1] + rng.uniform(-0.06, 0.06)) for _ in range(k)]
    out = []
    for i in range(n):
        sc = subcenters[i % k]
        out.append(Hotspot(
            lat=round(sc[0] + rng.uniform(-0.011, 0.011), 6),
            lon=round(sc[1] + rng.uniform(-0.011, 0.011), 6),
            frp=round(rng.uniform(3, 12) * (1.0 + 3.0 * activity * rng.random()), 3),
            brightness=round(rng.uniform(315, 330) + 45 * activity, 2),
            acq_date=date,
            acq_time=rng.randrange(0, 1440),
            satellite=rng.choice(["NPP", "N20", "N21"]),
        ))
    if rng.random() < 0.4:  # the occasional isolated detection -> DBSCAN noise
        out.append(Hotspot(
            lat=round(center[0] + rng.choice([-0.15, 0.15]), 6),
            lon=round(center[1] + rng.uniform(-0.02, 0.02), 6),
            frp=round(rng.uniform(1, 5), 3),
            brightness=round(rng.uniform(310, 325), 2),
            acq_date=date,
            acq_time=rng.randrange(0, 1440),
            satellite="NPP",
        ))
    return out


def _make_fire(seed: int, fire_id: str, start: dt.date, n_days: int,
               lat: float, lon: float, quiet_days: tuple[int, ...]):
    rng = random.Random(f"{seed}:{fire_id}")
    hotspots: list[Hotspot] = []
    truth: list[GroundTruthDay] = []
    for t in range(n_days):
        date = start + dt.timedelta(days=t)
        activity = math.sin(math.pi * (t + 0.5) / n_days)
        if t not in quiet_days:
            hotspots.extend(_fire_day_hotspots(rng, date, (lat, lon), activity))
        personnel = int(150 + 900 * activity + rng.uniform(-30, 30))
        truth.append(GroundTruthDay(
            fire_id=fire_id, date=date, personnel=personnel,
            daily_cost=round(personnel * rng.uniform(0.0028, 0.0036), 4),
        ))
    return hotspots, truth


CONFIG_TEMPLATE = """[paths]
fires_dir = "fires"
stations = "stations.geojson"
counties = "counties.geojson"
landcover = "landcover.asc"
population = "population.asc"
weather_dir = "weather"
ground_truth = "ground_truth.csv"
corpus_dir = "corpus"

[params]
eps_m = 3000.0
min_pts = 3
top_k_clusters = 5
analog_k = 5
delta_threshold = 0.1
bound_slack_low = 0.25
bound_slack_high = 4.0

[client]
kind = "mock"
max_attempts = 3

[corpus]
fires = ["ALPHA", "BRAVO", "CHARLIE"]
"""


def generate_dataset(root: Path, seed: int = 20) -> dict:
    """Write the full dataset under ``root``; returns a small summary."""
    root = Path(root)
    (root / "fires").mkdir(parents=True, exist_ok=True)
    (root / "weather").mkdir(exist_ok=True)

    static_rng = random.Random(f"{seed}:static")
    with open(root / "stations.geojson", "w") as fh:
        write_stations(_stations(static_rng), fh)
    with open(root / "counties.geojson", "w") as fh:
        write_counties(_counties(), fh)
    with open(root / "landcover.asc", "w") as fh:
        write_raster(_landcover(random.Random(f"{seed}:landcover")), fh)
    with open(root / "population.asc", "w") as fh:
        write_raster(_population(random.Random(f"{seed}:population")), fh)

    all_truth: dict[str, list[GroundTruthDay]] = {}
    all_dates: set[dt.date] = set()
    fires = {**CORPUS_FIRES, **EVAL_FIRES}
    for fire_id, (start, n_days, lat, lon, quiet) in fires.items():
        hotspots, truth = _make_fire(seed, fire_id, start, n_days, lat, lon, quiet)
        fire_dir = root / "fires" / fire_id
        fire_dir.mkdir(parents=True, exist_ok=True)
        with open(fire_dir / "hotspots.csv", "w") as fh:
            write_hotspots(hotspots, fh)
        all_truth[fire_id] = truth
        all_dates.update(t.date for t in truth)

    with open(root / "ground_truth.csv", "w") as fh:
        write_ground_truth(all_truth, fh)

    for date in sorted(all_dates):
        for var in WEATHER_VARS:
            with open(root / "weather" / f"{date.isoformat()}_{var}.asc", "w") as fh:
                write_raster(_weather_grid(var, date), fh)

    (root / "config.toml").write_text(CONFIG_TEMPLATE)
    return {
        "root": str(root),
        "fires": sorted(fires),
        "corpus_fires": sorted(CORPUS_FIRES),
        "eval_fires": sorted(EVAL_FIRES),
        "dates": len(all_dates),
    }

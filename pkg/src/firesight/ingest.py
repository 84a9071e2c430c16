"""File-format ingestion with unit normalization at the boundary.

Four external formats are supported:

* hotspot CSV  -- FIRMS-style columns: latitude, longitude, bright_ti4 (or
  brightness), frp, acq_date, acq_time, satellite
* stations     -- GeoJSON FeatureCollection of Point features with ``id``
  and ``name`` properties
* raster       -- ASCII grid: ``ncols``/``nrows``/``xllcorner``/``yllcorner``/
  ``cellsize``/``NODATA_value`` header lines, then row-major values
  (north row first)
* ground truth -- CSV ``fire_id,date,personnel,daily_cost_musd``
  (cost in million USD)

Each parser rejects records that violate their type invariants instead of
coercing them; matching writers exist so every dataset round-trips.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
from dataclasses import dataclass

from .errors import AlignmentError, ConflictError, FormatError, RowError, UnitError

KELVIN_FLOOR = 200.0  # anything colder is assumed to be a unit mix-up

WEATHER_VARS = ("bi", "tmax", "tmin", "wind", "fm1")


@dataclass(frozen=True)
class Hotspot:
    """One satellite fire detection."""

    lat: float
    lon: float
    frp: float              # megawatts
    brightness: float       # kelvin
    acq_date: dt.date
    acq_time: int           # minutes of day, UTC
    satellite: str = ""

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")
        if self.frp < 0:
            raise ValueError(f"negative FRP: {self.frp}")
        if self.brightness <= 0:
            raise ValueError(f"non-positive brightness: {self.brightness}")
        if not (0 <= self.acq_time < 1440):
            raise ValueError(f"acq_time outside minutes-of-day range: {self.acq_time}")

    def sort_key(self):
        return (self.lat, self.lon, self.frp, self.brightness, self.acq_time, self.satellite)


@dataclass(frozen=True)
class FireStation:
    id: str
    lat: float
    lon: float
    name: str = ""

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"station {self.id}: coordinates out of range")


@dataclass(frozen=True)
class RasterGrid:
    """Row-major georeferenced grid; origin is the upper-left corner."""

    origin_lat: float
    origin_lon: float
    cell_size_deg: float
    n_rows: int
    n_cols: int
    values: tuple[float, ...]
    nodata: float = -9999.0

    def __post_init__(self):
        if self.cell_size_deg <= 0:
            raise ValueError("cell size must be positive")
        if self.n_rows * self.n_cols != len(self.values):
            raise ValueError("value count does not match declared dimensions")

    def value(self, row: int, col: int) -> float:
        return self.values[row * self.n_cols + col]

    def is_nodata(self, v: float) -> bool:
        return v == self.nodata

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        """(lat, lon) of the cell center."""
        return (self.origin_lat - (row + 0.5) * self.cell_size_deg,
                self.origin_lon + (col + 0.5) * self.cell_size_deg)

    def cell_of(self, lat: float, lon: float) -> tuple[int, int] | None:
        """(row, col) containing the point, or None outside the extent."""
        row = int((self.origin_lat - lat) / self.cell_size_deg)
        col = int((lon - self.origin_lon) / self.cell_size_deg)
        if 0 <= row < self.n_rows and 0 <= col < self.n_cols:
            return row, col
        return None

    def same_georef(self, other: "RasterGrid") -> bool:
        return (self.origin_lat == other.origin_lat
                and self.origin_lon == other.origin_lon
                and self.cell_size_deg == other.cell_size_deg
                and self.n_rows == other.n_rows
                and self.n_cols == other.n_cols)


@dataclass(frozen=True)
class GroundTruthDay:
    fire_id: str
    date: dt.date
    personnel: int
    daily_cost: float  # million USD

    def __post_init__(self):
        if self.personnel < 0:
            raise ValueError("negative personnel")
        if self.daily_cost < 0:
            raise ValueError("negative daily cost")


@dataclass(frozen=True)
class WeatherDayGrids:
    date: dt.date
    bi: RasterGrid
    tmax: RasterGrid
    tmin: RasterGrid
    wind: RasterGrid
    fm1: RasterGrid

    def __post_init__(self):
        for name in ("tmax", "tmin", "wind", "fm1"):
            if not self.bi.same_georef(getattr(self, name)):
                raise AlignmentError(f"weather grid '{name}' georeferencing differs from 'bi'")

    def grid(self, var: str) -> RasterGrid:
        return getattr(self, var)


# ---------------------------------------------------------------------------
# hotspots


def _parse_acq_time(raw: str) -> int:
    """FIRMS HHMM token (e.g. '0930' or '930') -> minutes of day."""
    token = raw.strip()
    if not token.isdigit() or len(token) > 4:
        raise ValueError(f"bad acq_time {raw!r}")
    n = int(token)
    hours, minutes = divmod(n, 100)
    if minutes >= 60 or hours >= 24:
        raise ValueError(f"bad acq_time {raw!r}")
    return hours * 60 + minutes


def parse_hotspots(stream) -> list[Hotspot]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise FormatError("hotspot CSV has no header")
    cols = {c.strip().lower(): c for c in reader.fieldnames}
    bright_col = cols.get("brightness") or cols.get("bright_ti4")
    required = ["latitude", "longitude", "frp", "acq_date", "acq_time"]
    missing = [c for c in required if c not in cols]
    if bright_col is None:
        missing.append("brightness|bright_ti4")
    if missing:
        raise FormatError(f"hotspot CSV missing columns: {', '.join(missing)}")

    out: list[Hotspot] = []
    for i, row in enumerate(reader, start=1):
        try:
            out.append(Hotspot(
                lat=float(row[cols["latitude"]]),
                lon=float(row[cols["longitude"]]),
                frp=float(row[cols["frp"]]),
                brightness=float(row[bright_col]),
                acq_date=dt.date.fromisoformat(row[cols["acq_date"]].strip()),
                acq_time=_parse_acq_time(row[cols["acq_time"]]),
                satellite=(row.get(cols.get("satellite", ""), "") or "").strip(),
            ))
        except (ValueError, TypeError, KeyError) as exc:
            raise RowError(i, str(exc)) from exc
    return out


def write_hotspots(hotspots: list[Hotspot], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["latitude", "longitude", "bright_ti4", "frp", "acq_date", "acq_time", "satellite"])
    for h in hotspots:
        w.writerow([repr(h.lat), repr(h.lon), repr(h.brightness), repr(h.frp),
                    h.acq_date.isoformat(), f"{h.acq_time // 60:02d}{h.acq_time % 60:02d}",
                    h.satellite])


# ---------------------------------------------------------------------------
# stations


def parse_stations(stream) -> list[FireStation]:
    try:
        doc = json.load(stream)
    except json.JSONDecodeError as exc:
        raise FormatError(f"stations GeoJSON is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise FormatError("stations document is not a GeoJSON FeatureCollection")

    out: list[FireStation] = []
    seen: set[str] = set()
    for i, feature in enumerate(doc.get("features", [])):
        geom = feature.get("geometry") or {}
        if geom.get("type") != "Point":
            raise FormatError(f"feature {i}: expected Point geometry, got {geom.get('type')!r}")
        try:
            lon, lat = geom["coordinates"][:2]
            props = feature.get("properties") or {}
            station = FireStation(id=str(props["id"]), lat=float(lat), lon=float(lon),
                                  name=str(props.get("name", "")))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"feature {i}: {exc}") from exc
        if station.id in seen:
            raise ConflictError(f"duplicate station id {station.id!r}")
        seen.add(station.id)
        out.append(station)
    return out


def write_stations(stations: list[FireStation], stream) -> None:
    doc = {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [s.lon, s.lat]},
                "properties": {"id": s.id, "name": s.name},
            }
            for s in stations
        ],
    }
    json.dump(doc, stream, indent=1)
    stream.write("\n")


# ---------------------------------------------------------------------------
# rasters

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def load_raster(stream) -> RasterGrid:
    text = stream.read()
    header: dict[str, float] = {}
    body_start = 0
    for line in text.splitlines(keepends=True):
        stripped = line.strip()
        parts = stripped.split()
        if len(parts) == 2 and parts[0].lower() in _HEADER_KEYS:
            try:
                header[parts[0].lower()] = float(parts[1])
            except ValueError as exc:
                raise FormatError(f"bad raster header line: {stripped!r}") from exc
            body_start += len(line)
        else:
            break
    for key in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if key not in header:
            raise FormatError(f"raster header missing {key!r}")

    n_cols = int(header["ncols"])
    n_rows = int(header["nrows"])
    try:
        values = tuple(float(tok) for tok in text[body_start:].split())
    except ValueError as exc:
        raise FormatError(f"unparsable raster value: {exc}") from exc
    if len(values) != n_rows * n_cols:
        raise FormatError(f"raster declares {n_rows}x{n_cols}={n_rows * n_cols} cells "
                          f"but provides {len(values)} values")
    return RasterGrid(
        origin_lat=header["yllcorner"] + n_rows * header["cellsize"],
        origin_lon=header["xllcorner"],
        cell_size_deg=header["cellsize"],
        n_rows=n_rows,
        n_cols=n_cols,
        values=values,
        nodata=header.get("nodata_value", -9999.0),
    )


def write_raster(grid: RasterGrid, stream) -> None:
    stream.write(f"ncols {grid.n_cols}\n")
    stream.write(f"nrows {grid.n_rows}\n")
    stream.write(f"xllcorner {repr(grid.origin_lon)}\n")
    stream.write(f"yllcorner {repr(grid.origin_lat - grid.n_rows * grid.cell_size_deg)}\n")
    stream.write(f"cellsize {repr(grid.cell_size_deg)}\n")
    stream.write(f"NODATA_value {repr(grid.nodata)}\n")
    for r in range(grid.n_rows):
        row = grid.values[r * grid.n_cols:(r + 1) * grid.n_cols]
        stream.write(" ".join(repr(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# ground truth


def parse_ground_truth(stream) -> dict[str, list[GroundTruthDay]]:
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise FormatError("ground truth CSV has no header")
    cols = {c.strip().lower() for c in reader.fieldnames}
    missing = {"fire_id", "date", "personnel", "daily_cost_musd"} - cols
    if missing:
        raise FormatError(f"ground truth CSV missing columns: {', '.join(sorted(missing))}")

    by_fire: dict[str, list[GroundTruthDay]] = {}
    seen: set[tuple[str, dt.date]] = set()
    for i, row in enumerate(reader, start=1):
        try:
            personnel_raw = float(row["personnel"])
            if personnel_raw != int(personnel_raw):
                raise ValueError(f"personnel is not an integer: {row['personnel']!r}")
            day = GroundTruthDay(
                fire_id=row["fire_id"].strip(),
                date=dt.date.fromisoformat(row["date"].strip()),
                personnel=int(personnel_raw),
                daily_cost=float(row["daily_cost_musd"]),
            )
        except (ValueError, TypeError, KeyError) as exc:
            raise RowError(i, str(exc)) from exc
        key = (day.fire_id, day.date)
        if key in seen:
            raise ConflictError(f"duplicate ground-truth day {day.fire_id} {day.date}")
        seen.add(key)
        by_fire.setdefault(day.fire_id, []).append(day)

    for series in by_fire.values():
        series.sort(key=lambda d: d.date)
    return by_fire


def write_ground_truth(by_fire: dict[str, list[GroundTruthDay]], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["fire_id", "date", "personnel", "daily_cost_musd"])
    for fire_id in sorted(by_fire):
        for day in by_fire[fire_id]:
            w.writerow([fire_id, day.date.isoformat(), day.personnel, repr(day.daily_cost)])


# ---------------------------------------------------------------------------
# weather bundles


def parse_weather_day(streams: dict[str, io.TextIOBase], date: dt.date) -> WeatherDayGrids:
    """Bundle the five per-variable grids for one day.

    ``streams`` maps each of bi/tmax/tmin/wind/fm1 to an open text stream.
    Temperatures below the kelvin floor are rejected as unit errors.
    """
    missing = [v for v in WEATHER_VARS if v not in streams]
    if missing:
        raise FormatError(f"weather day {date} missing variables: {', '.join(missing)}")
    grids = {var: load_raster(streams[var]) for var in WEATHER_VARS}
    for var in ("tmax", "tmin"):
        g = grids[var]
        bad = [v for v in g.values if not g.is_nodata(v) and v < KELVIN_FLOOR]
        if bad:
            raise UnitError(f"{var} grid for {date} has values below {KELVIN_FLOOR} K "
                            f"(e.g. {bad[0]}); expected kelvin")
    return WeatherDayGrids(date=date, **grids)

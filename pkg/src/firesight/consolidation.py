"""Fusion of enrichment into per-cluster features, daily snapshots, anchors.

All cross-cluster reductions use ``math.fsum`` so results are identical for
any cluster or member ordering (exactly-rounded sums are order independent),
which the rendering layer depends on for byte-stable output.

``EventDayContext`` serializes to canonical JSON -- sorted keys, floats at 4
fractional digits -- which is the on-disk format for the historical corpus.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field

from .errors import PreconditionError
from .enrichment import ExposureProfile, FusedWeather, StationCoverage, TerrainProfile
from .footprint import Cluster
from .geometry import MILES_PER_M, geodesic_perimeter_m
from .ingest import WEATHER_VARS

UP, FLAT, DOWN = "↑", "≈", "↓"

TREND_FIELDS = ("points", "frp", "area", "cost", "personnel")
DEFAULT_DELTA_THRESHOLD = 0.10


@dataclass(frozen=True)
class ClusterFeatures:
    cluster_id: int
    point_count: int
    sum_frp: float
    max_brightness: float
    weather: FusedWeather
    terrain: TerrainProfile
    exposure: ExposureProfile
    access: StationCoverage
    area_acres: float
    perimeter_m: float

    def __post_init__(self):
        if self.point_count < 1:
            raise ValueError("cluster with no points")
        if self.sum_frp < 0:
            raise ValueError("negative total FRP")


@dataclass(frozen=True)
class GlobalSnapshot:
    date: dt.date
    total_points: int = 0
    total_frp: float = 0.0
    total_area_acres: float = 0.0
    max_frp: float = 0.0
    max_brightness: float = 0.0
    median_frp_per_cluster: float = 0.0
    p95_frp_per_cluster: float = 0.0
    n_clusters: int = 0
    counties: tuple[str, ...] = ()
    total_population: float | None = 0.0   # None = population layer unavailable
    station_count: int = 0
    nearest_station_mi: float | None = 0.0  # None = no stations known


@dataclass(frozen=True)
class RollingStats:
    avg3: float
    max3: float
    avg7: float
    max7: float

    def __post_init__(self):
        if self.avg3 > self.max3 + 1e-9 or self.avg7 > self.max7 + 1e-9:
            raise ValueError("rolling mean exceeds rolling max")


@dataclass(frozen=True)
class TemporalAnchors:
    rolling: dict[str, RollingStats]
    pct_of_hist_max_points: float
    pct_of_hist_max_area: float
    days_since_global_max_points: int
    days_since_global_max_area: int
    global_max_points: float
    global_max_area: float
    trends: dict[str, str]


@dataclass(frozen=True)
class EventDayContext:
    fire_id: str
    snapshot: GlobalSnapshot
    clusters: tuple[ClusterFeatures, ...]
    anchors: TemporalAnchors | None = None

    @property
    def date(self) -> dt.date:
        return self.snapshot.date


def consolidate_cluster(cluster: Cluster, weather: FusedWeather, terrain: TerrainProfile,
                        exposure: ExposureProfile, access: StationCoverage) -> ClusterFeatures:
    return ClusterFeatures(
        cluster_id=cluster.cluster_id,
        point_count=len(cluster.members),
        sum_frp=math.fsum(h.frp for h in cluster.members),
        max_brightness=max(h.brightness for h in cluster.members),
        weather=weather,
        terrain=terrain,
        exposure=exposure,
        access=access,
        area_acres=cluster.area_acres,
        perimeter_m=geodesic_perimeter_m(cluster.footprint),
    )


def _median(sorted_vals: list[float]) -> float:
    n = len(sorted_vals)
    mid = n // 2
    if n % 2 == 1:
        return sorted_vals[mid]
    return (sorted_vals[mid - 1] + sorted_vals[mid]) / 2.0


def _p95_nearest_rank(sorted_vals: list[float]) -> float:
    rank = math.ceil(0.95 * len(sorted_vals))  # 1-based nearest rank
    return sorted_vals[rank - 1]


def global_snapshot(date: dt.date, clusters: list[ClusterFeatures]) -> GlobalSnapshot:
    if not clusters:
        return GlobalSnapshot(date=date)
    frps = sorted(c.sum_frp for c in clusters)
    counties = sorted({cid for c in clusters for cid in c.exposure.counties})
    station_ids = sorted({sid for c in clusters for sid in c.access.ids_10km})
    nearest = [c.access.nearest[0][1] for c in clusters if c.access.nearest]
    pops = [c.exposure.population for c in clusters if c.exposure.population is not None]
    return GlobalSnapshot(
        date=date,
        total_points=sum(c.point_count for c in clusters),
        total_frp=math.fsum(frps),
        total_area_acres=math.fsum(sorted(c.area_acres for c in clusters)),
        max_frp=frps[-1],
        max_brightness=max(c.max_brightness for c in clusters),
        median_frp_per_cluster=_median(frps),
        p95_frp_per_cluster=_p95_nearest_rank(frps),
        n_clusters=len(clusters),
        counties=tuple(counties),
        total_population=math.fsum(sorted(pops)) if pops else None,
        station_count=len(station_ids),
        nearest_station_mi=(min(nearest) * MILES_PER_M) if nearest else None,
    )


def event_weather(clusters: list[ClusterFeatures]) -> FusedWeather:
    """Event-level weather: cluster fused fields averaged with sum-FRP weights."""
    fused: dict[str, float | None] = {}
    for var in WEATHER_VARS:
        pairs = [(c.sum_frp, c.weather.get(var)) for c in clusters
                 if c.weather.get(var) is not None]
        if not pairs:
            fused[var] = None
            continue
        pairs.sort()
        wsum = math.fsum(w for w, _ in pairs)
        if wsum > 0:
            fused[var] = math.fsum(w * v for w, v in pairs) / wsum
        else:
            fused[var] = math.fsum(v for _, v in pairs) / len(pairs)
    return FusedWeather(**fused)


def qualitative_delta(prev: float, cur: float,
                      rel_threshold: float = DEFAULT_DELTA_THRESHOLD) -> str:
    """Trend symbol for a non-negative monitored field."""
    if rel_threshold <= 0:
        raise PreconditionError("threshold must be positive")
    if prev < 0 or cur < 0:
        raise PreconditionError("monitored fields are non-negative")
    if prev == 0:
        return UP if cur > 0 else FLAT
    if cur > prev * (1.0 + rel_threshold):
        return UP
    if cur < prev * (1.0 - rel_threshold):
        return DOWN
    return FLAT


@dataclass(frozen=True)
class DayObservation:
    """Fire-signal series entry (one per analyzed day)."""
    date: dt.date
    points: float
    frp: float
    area: float


@dataclass(frozen=True)
class ResourceObservation:
    """Personnel/cost series entry: previously emitted outputs or ground truth."""
    date: dt.date
    personnel: float
    cost: float  # million USD


def _window_stats(series: list[float]) -> RollingStats:
    w3 = series[-3:]
    w7 = series[-7:]
    return RollingStats(avg3=math.fsum(w3) / len(w3), max3=max(w3),
                        avg7=math.fsum(w7) / len(w7), max7=max(w7))


def _days_since_max(dates: list[dt.date], values: list[float], today: dt.date) -> tuple[float, int]:
    peak = max(values)
    # most recent occurrence of the maximum
    idx = max(i for i, v in enumerate(values) if v == peak)
    return peak, (today - dates[idx]).days


def temporal_anchors(fire_history: list[DayObservation], today: DayObservation,
                     resource_history: list[ResourceObservation],
                     rel_threshold: float = DEFAULT_DELTA_THRESHOLD) -> TemporalAnchors:
    """Rolling means/maxima and qualitative trends.

    Fire-signal windows include today; resource windows cover prior days only
    (today's personnel/cost are outputs, not observations).
    """
    if not fire_history:
        raise PreconditionError("temporal anchors need at least one prior day")

    dates = [d.date for d in fire_history] + [today.date]
    series = {
        "points": [d.points for d in fire_history] + [today.points],
        "frp": [d.frp for d in fire_history] + [today.frp],
        "area": [d.area for d in fire_history] + [today.area],
    }
    rolling = {name: _window_stats(vals) for name, vals in series.items()}

    trends = {name: qualitative_delta(vals[-2], vals[-1], rel_threshold)
              for name, vals in series.items()}

    if resource_history:
        for name in ("personnel", "cost"):
            vals = [getattr(r, name) for r in resource_history]
            rolling[name] = _window_stats(vals)
            trends[name] = (qualitative_delta(vals[-2], vals[-1], rel_threshold)
                            if len(vals) >= 2 else FLAT)

    max_points, since_points = _days_since_max(dates, series["points"], today.date)
    max_area, since_area = _days_since_max(dates, series["area"], today.date)
    return TemporalAnchors(
        rolling=rolling,
        pct_of_hist_max_points=(100.0 * today.points / max_points) if max_points > 0 else 0.0,
        pct_of_hist_max_area=(100.0 * today.area / max_area) if max_area > 0 else 0.0,
        days_since_global_max_points=since_points,
        days_since_global_max_area=since_area,
        global_max_points=max_points,
        global_max_area=max_area,
        trends=trends,
    )


# ---------------------------------------------------------------------------
# canonical JSON


def _canon(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            raise ValueError("non-finite float in canonical document")
        if obj == 0.0:
            obj = 0.0  # normalize -0.0
        return f"{obj:.4f}"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ",".join(f"{json.dumps(str(k))}:{_canon(v)}" for k, v in items) + "}"
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, floats fixed to 4 fractional digits."""
    return _canon(obj) + "\n"


def _weather_dict(w: FusedWeather) -> dict:
    return {var: w.get(var) for var in WEATHER_VARS}


def _terrain_dict(t: TerrainProfile) -> dict:
    return {
        "composition": {str(k): v for k, v in t.composition.items()},
        "shannon_diversity": t.shannon_diversity,
        "fragmentation": t.fragmentation,
        "risk_fractions": dict(t.risk_fractions),
        "continuous_fuels": t.continuous_fuels,
        "barriers": t.barriers,
        "spread_potential": t.spread_potential,
    }


def context_to_dict(ctx: EventDayContext) -> dict:
    snap = ctx.snapshot
    doc = {
        "fire_id": ctx.fire_id,
        "date": snap.date.isoformat(),
        "snapshot": {
            "total_points": snap.total_points,
            "total_frp": snap.total_frp,
            "total_area_acres": snap.total_area_acres,
            "max_frp": snap.max_frp,
            "max_brightness": snap.max_brightness,
            "median_frp_per_cluster": snap.median_frp_per_cluster,
            "p95_frp_per_cluster": snap.p95_frp_per_cluster,
            "n_clusters": snap.n_clusters,
            "counties": list(snap.counties),
            "total_population": snap.total_population,
            "station_count": snap.station_count,
            "nearest_station_mi": snap.nearest_station_mi,
        },
        "clusters": [
            {
                "cluster_id": c.cluster_id,
                "point_count": c.point_count,
                "sum_frp": c.sum_frp,
                "max_brightness": c.max_brightness,
                "area_acres": c.area_acres,
                "perimeter_m": c.perimeter_m,
                "weather": _weather_dict(c.weather),
                "terrain": _terrain_dict(c.terrain),
                "exposure": {
                    "population": c.exposure.population,
                    "density": c.exposure.density,
                    "counties": list(c.exposure.counties),
                },
                "access": {
                    "nearest": [[sid, d] for sid, d in c.access.nearest],
                    "density_10km": c.access.density_10km,
                    "ids_10km": list(c.access.ids_10km),
                },
            }
            for c in ctx.clusters
        ],
        "anchors": None,
    }
    if ctx.anchors is not None:
        a = ctx.anchors
        doc["anchors"] = {
            "rolling": {name: {"avg3": rs.avg3, "max3": rs.max3,
                               "avg7": rs.avg7, "max7": rs.max7}
                        for name, rs in a.rolling.items()},
            "pct_of_hist_max_points": a.pct_of_hist_max_points,
            "pct_of_hist_max_area": a.pct_of_hist_max_area,
            "days_since_global_max_points": a.days_since_global_max_points,
            "days_since_global_max_area": a.days_since_global_max_area,
            "global_max_points": a.global_max_points,
            "global_max_area": a.global_max_area,
            "trends": dict(a.trends),
        }
    return doc


def context_from_dict(doc: dict) -> EventDayContext:
    snap = doc["snapshot"]
    snapshot = GlobalSnapshot(
        date=dt.date.fromisoformat(doc["date"]),
        total_points=snap["total_points"],
        total_frp=snap["total_frp"],
        total_area_acres=snap["total_area_acres"],
        max_frp=snap["max_frp"],
        max_brightness=snap["max_brightness"],
        median_frp_per_cluster=snap["median_frp_per_cluster"],
        p95_frp_per_cluster=snap["p95_frp_per_cluster"],
        n_clusters=snap["n_clusters"],
        counties=tuple(snap["counties"]),
        total_population=snap["total_population"],
        station_count=snap["station_count"],
        nearest_station_mi=snap["nearest_station_mi"],
    )
    clusters = []
    for c in doc["clusters"]:
        t = c["terrain"]
        clusters.append(ClusterFeatures(
            cluster_id=c["cluster_id"],
            point_count=c["point_count"],
            sum_frp=c["sum_frp"],
            max_brightness=c["max_brightness"],
            area_acres=c["area_acres"],
            perimeter_m=c["perimeter_m"],
            weather=FusedWeather(**c["weather"]),
            terrain=TerrainProfile(
                composition={int(k): v for k, v in t["composition"].items()},
                shannon_diversity=t["shannon_diversity"],
                fragmentation=t["fragmentation"],
                risk_fractions=dict(t["risk_fractions"]),
                continuous_fuels=t["continuous_fuels"],
                barriers=t["barriers"],
                spread_potential=t["spread_potential"],
            ),
            exposure=ExposureProfile(
                population=c["exposure"]["population"],
                density=c["exposure"]["density"],
                counties=tuple(c["exposure"]["counties"]),
            ),
            access=StationCoverage(
                nearest=tuple((sid, d) for sid, d in c["access"]["nearest"]),
                density_10km=c["access"]["density_10km"],
                ids_10km=tuple(c["access"]["ids_10km"]),
            ),
        ))
    anchors = None
    if doc.get("anchors") is not None:
        a = doc["anchors"]
        anchors = TemporalAnchors(
            rolling={name: RollingStats(**rs) for name, rs in a["rolling"].items()},
            pct_of_hist_max_points=a["pct_of_hist_max_points"],
            pct_of_hist_max_area=a["pct_of_hist_max_area"],
            days_since_global_max_points=a["days_since_global_max_points"],
            days_since_global_max_area=a["days_since_global_max_area"],
            global_max_points=a["global_max_points"],
            global_max_area=a["global_max_area"],
            trends=dict(a["trends"]),
        )
    return EventDayContext(fire_id=doc["fire_id"], snapshot=snapshot,
                           clusters=tuple(clusters), anchors=anchors)

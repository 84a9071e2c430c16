"""Fixed-slot perception script rendering.

The script is strictly templated plain text with ``##``-headed sections:
fire overview, affected areas, rolling metrics (when history exists), then
top-K cluster blocks ordered by descending total FRP. Every slot is always
present; missing data renders as ``NA``. Rendering is a pure function of the
day context, so identical contexts produce byte-identical text regardless of
how clusters or hotspots were ordered upstream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .consolidation import ClusterFeatures, EventDayContext, GlobalSnapshot, event_weather
from .errors import SchemaError, UnitLockError
from .geometry import MILES_PER_M
from .ingest import KELVIN_FLOOR

DEFAULT_TOP_K = 5

# every slot the fixed schema knows; cluster slots are checked with the
# [i] index stripped
_KNOWN_SLOTS = frozenset({
    "overview.date", "overview.total_points", "overview.n_clusters",
    "overview.total_frp", "overview.total_area", "overview.max_frp",
    "overview.max_brightness", "overview.median_frp", "overview.p95_frp",
    "overview.weather.bi", "overview.weather.tmax", "overview.weather.tmin",
    "overview.weather.wind", "overview.weather.fm1",
    "areas.counties", "areas.population", "areas.station_count",
    "areas.nearest_station_mi",
    "anchors.points.avg3", "anchors.points.max3", "anchors.points.avg7",
    "anchors.points.max7", "anchors.pct_of_hist_max_points",
    "anchors.global_max_points", "anchors.area.avg3", "anchors.area.avg7",
    "anchors.pct_of_hist_max_area", "anchors.global_max_area",
    "cluster.points", "cluster.frp", "cluster.brightness", "cluster.area",
    "cluster.weather.bi", "cluster.weather.tmax", "cluster.weather.tmin",
    "cluster.weather.wind", "cluster.weather.fm1",
    "cluster.county", "cluster.state", "cluster.population",
    "cluster.stations", "cluster.terrain",
})

_CLUSTER_INDEX_RE = re.compile(r"cluster\[\d+\]")


@dataclass(frozen=True)
class PerceptionScript:
    text: str
    k_used: int
    na_fields: tuple[str, ...]


def fmt1(v: float) -> str:
    v = float(v)
    return f"{abs(v) if v == 0 else v:.1f}"


def fmt2(v: float) -> str:
    v = float(v)
    return f"{abs(v) if v == 0 else v:.2f}"


def fmt_int(v: float) -> str:
    return str(int(round(v)))


class _SlotTracker:
    """Applies the NA policy per slot and records which slots were NA."""

    def __init__(self):
        self.na_fields: list[str] = []

    def render(self, slot: str, value, fmt=fmt1) -> str:
        base = _CLUSTER_INDEX_RE.sub("cluster", slot)
        if base not in _KNOWN_SLOTS:
            raise SchemaError(f"unknown perception slot {slot!r}")
        if value is None:
            self.na_fields.append(slot)
            return "NA"
        return fmt(value)


def na_policy(slot: str, value, fmt=fmt1) -> str:
    """Rendered token for one slot: ``NA`` when absent, else formatted value."""
    return _SlotTracker().render(slot, value, fmt)


def unit_lock(context: EventDayContext) -> EventDayContext:
    """Assert canonical units across the context; reject celsius-smelling temps."""
    for c in context.clusters:
        for var in ("tmax", "tmin"):
            v = c.weather.get(var)
            if v is not None and v < KELVIN_FLOOR:
                raise UnitLockError(f"cluster[{c.cluster_id}].weather.{var}",
                                    f"{v} is below {KELVIN_FLOOR} K; expected kelvin")
        if c.sum_frp < 0:
            raise UnitLockError(f"cluster[{c.cluster_id}].frp", "negative FRP")
        if c.area_acres < 0:
            raise UnitLockError(f"cluster[{c.cluster_id}].area", "negative area")
        for sid, d in c.access.nearest:
            if d < 0:
                raise UnitLockError(f"cluster[{c.cluster_id}].stations",
                                    f"negative distance to {sid}")
    return context


def _delta(prev, cur, fmt=fmt1, pct: bool = False) -> str:
    """`` (up 12.3, 15%)`` style suffix versus yesterday; empty without history."""
    if prev is None or cur is None:
        return ""
    diff = cur - prev
    if diff == 0:
        return " (no change)"
    word = "up" if diff > 0 else "down"
    body = f"{word} {fmt(abs(diff))}"
    if pct and prev > 0:
        body += f", {abs(diff) / prev * 100.0:.0f}%"
    return f" ({body})"


def _overview_section(snap: GlobalSnapshot, weather, prev: GlobalSnapshot | None,
                      slots: _SlotTracker) -> list[str]:
    p = prev
    lines = [
        "## Fire Overview vs Yesterday" if p is not None else "## Fire Overview",
        f"- Current date: {snap.date.strftime('%m-%d')}",
        f"- Total Fire Points: {slots.render('overview.total_points', snap.total_points, fmt_int)}"
        + _delta(p.total_points if p else None, snap.total_points, fmt_int),
        f"- Num Clusters: {slots.render('overview.n_clusters', snap.n_clusters, fmt_int)}"
        + _delta(p.n_clusters if p else None, snap.n_clusters, fmt_int),
        f"- Total FRP: {slots.render('overview.total_frp', snap.total_frp)} MW"
        + _delta(p.total_frp if p else None, snap.total_frp, pct=True),
        f"- Total area: {slots.render('overview.total_area', snap.total_area_acres)} acres"
        + _delta(p.total_area_acres if p else None, snap.total_area_acres, pct=True),
        f"- Max FRP/Brightness: {slots.render('overview.max_frp', snap.max_frp)}"
        f"/{slots.render('overview.max_brightness', snap.max_brightness)}"
        + _delta(p.max_frp if p else None, snap.max_frp),
        f"- Median/P95 FRP per cluster: {slots.render('overview.median_frp', snap.median_frp_per_cluster)}"
        f"/{slots.render('overview.p95_frp', snap.p95_frp_per_cluster)} MW",
    ]
    fm1 = slots.render("overview.weather.fm1", weather.fm1)
    lines.append(
        f"- Weather conditions: BI={slots.render('overview.weather.bi', weather.bi)}, "
        f"Tmax/Tmin={slots.render('overview.weather.tmax', weather.tmax)}"
        f"/{slots.render('overview.weather.tmin', weather.tmin)}, "
        f"Wind={slots.render('overview.weather.wind', weather.wind)}, "
        f"FM1={fm1}{'%' if fm1 != 'NA' else ''}"
    )
    return lines


def _areas_section(snap: GlobalSnapshot, prev: GlobalSnapshot | None,
                   slots: _SlotTracker) -> list[str]:
    if prev is not None:
        removed = sorted(set(prev.counties) - set(snap.counties))
        county_line = f"- Counties: removed {{{', '.join(removed) if removed else 'none'}}}; now {len(snap.counties)}"
    else:
        county_line = (f"- Counties: {', '.join(snap.counties) if snap.counties else 'none'}; "
                       f"now {len(snap.counties)}")
    return [
        "## Affected Areas vs Yesterday" if prev is not None else "## Affected Areas",
        county_line,
        f"- Total Population Affected: {slots.render('areas.population', snap.total_population, fmt_int)}"
        + _delta(prev.total_population if prev else None, snap.total_population, fmt_int),
        f"- Fire stations in area: {slots.render('areas.station_count', snap.station_count, fmt_int)}"
        + _delta(prev.station_count if prev else None, snap.station_count, fmt_int),
        f"- Nearest station: {slots.render('areas.nearest_station_mi', snap.nearest_station_mi)} mile"
        + _delta(prev.nearest_station_mi if prev else None, snap.nearest_station_mi),
    ]


def _anchors_section(context: EventDayContext, slots: _SlotTracker) -> list[str]:
    a = context.anchors
    pts = a.rolling["points"]
    area = a.rolling["area"]
    return [
        "## Fire Intensity Rolling Metrics",
        f"- 3-day avg fire points: {slots.render('anchors.points.avg3', pts.avg3)}",
        f"- 3-day max fire points: {slots.render('anchors.points.max3', pts.max3)}",
        f"- 7-day avg fire points: {slots.render('anchors.points.avg7', pts.avg7)}",
        f"- 7-day max fire points: {slots.render('anchors.points.max7', pts.max7)}",
        f"- Current fire points vs historical max: {slots.render('anchors.pct_of_hist_max_points', a.pct_of_hist_max_points)}%",
        f"- Global max fire points: {slots.render('anchors.global_max_points', a.global_max_points)} "
        f"({a.days_since_global_max_points} days ago)",
        f"- 3-day avg total area: {slots.render('anchors.area.avg3', area.avg3)} acres",
        f"- 7-day avg total area: {slots.render('anchors.area.avg7', area.avg7)} acres",
        f"- Current area vs historical max: {slots.render('anchors.pct_of_hist_max_area', a.pct_of_hist_max_area)}%",
        f"- Global max area: {slots.render('anchors.global_max_area', a.global_max_area)} acres "
        f"({a.days_since_global_max_area} days ago)",
    ]


def _cluster_block(rank: int, c: ClusterFeatures, slots: _SlotTracker) -> list[str]:
    tag = f"cluster[{rank}]"
    w = c.weather
    fire_line = (f"  fire[points={slots.render(f'{tag}.points', c.point_count, fmt_int)}, "
                 f"frp={slots.render(f'{tag}.frp', c.sum_frp)}, "
                 f"brightness={slots.render(f'{tag}.brightness', c.max_brightness)}, "
                 f"area={slots.render(f'{tag}.area', c.area_acres)}]")
    weather_line = (f"  weather[BI={slots.render(f'{tag}.weather.bi', w.bi)}, "
                    f"tmax={slots.render(f'{tag}.weather.tmax', w.tmax)}, "
                    f"tmin={slots.render(f'{tag}.weather.tmin', w.tmin)}, "
                    f"wind={slots.render(f'{tag}.weather.wind', w.wind)}, "
                    f"FM1={slots.render(f'{tag}.weather.fm1', w.fm1)}]")
    county = slots.render(f"{tag}.county",
                          c.exposure.counties[0] if c.exposure.counties else None, str)
    state = slots.render(f"{tag}.state", None, str)  # no state layer in this build
    dists = [fmt1(d * MILES_PER_M) for _, d in c.access.nearest[:3]]
    while len(dists) < 3:
        dists.append("NA")
    if all(d == "NA" for d in dists):
        slots.na_fields.append(f"{tag}.stations")
    location_line = (f"  location[{county}, {state}, "
                     f"pop={slots.render(f'{tag}.population', c.exposure.population, fmt_int)}, "
                     f"station_1/2/3={'/'.join(dists)} mile]")
    t = c.terrain
    if t.is_na:
        terrain_line = f"  terrain[{slots.render(f'{tag}.terrain', None, str)}]"
    else:
        terrain_line = (f"  terrain[spread={fmt2(t.spread_potential)}, "
                        f"risk_high/med/low={fmt2(t.risk_fractions['high'])}"
                        f"/{fmt2(t.risk_fractions['medium'])}/{fmt2(t.risk_fractions['low'])}, "
                        f"fuels={fmt2(t.continuous_fuels)}, barriers={fmt2(t.barriers)}, "
                        f"shannon={fmt2(t.shannon_diversity)}, frag={fmt2(t.fragmentation)}]")
    return [f"- Cluster {rank}:", fire_line, weather_line, location_line, terrain_line]


def render_script(context: EventDayContext, top_k: int = DEFAULT_TOP_K,
                  prev_snapshot: GlobalSnapshot | None = None) -> PerceptionScript:
    """Render the unit-locked script for one event day.

    ``prev_snapshot`` switches the overview/areas sections into their
    "vs Yesterday" form with per-field deltas.
    """
    unit_lock(context)
    slots = _SlotTracker()
    weather = event_weather(list(context.clusters))

    sections = [
        _overview_section(context.snapshot, weather, prev_snapshot, slots),
        _areas_section(context.snapshot, prev_snapshot, slots),
    ]
    if context.anchors is not None:
        sections.append(_anchors_section(context, slots))

    ordered = sorted(context.clusters, key=lambda c: (-c.sum_frp, c.cluster_id))
    chosen = ordered[:top_k]
    cluster_lines = ["## Cluster Details"]
    if chosen:
        for rank, c in enumerate(chosen, start=1):
            cluster_lines.extend(_cluster_block(rank, c, slots))
    else:
        cluster_lines.append("- none (no active clusters)")
    sections.append(cluster_lines)

    text = "\n\n".join("\n".join(lines) for lines in sections) + "\n"
    return PerceptionScript(text=text, k_used=len(chosen), na_fields=tuple(slots.na_fields))

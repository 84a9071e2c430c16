"""End-to-end orchestration: data layers -> day contexts -> agent loop.

Days within one event run strictly in date order (incremental prompts and
temporal anchors consume the previous days); the resource history feeding
the anchors is the agent's own previously emitted recommendations, with
ground truth substituted only when building the historical corpus.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path

from . import agent as agent_mod
from .analogs import load_corpus, save_stats, corpus_stats, corpus_raw_rows, write_context
from .clients import CompletionClient, LiveClient, MockCompletionClient, ReplayClient
from .config import RunConfig, require_paths
from .consolidation import (
    DayObservation,
    EventDayContext,
    ResourceObservation,
    canonical_json,
    consolidate_cluster,
    global_snapshot,
    temporal_anchors,
)
from .enrichment import (
    exposure as exposure_profile,
    load_landcover_risk,
    station_coverage,
    terrain_profile,
    weather_fusion_partial,
    ExposureProfile,
    TerrainProfile,
)
from .errors import AlignmentError, InputError
from .evaluation import DayPrediction, EventReport, emit_report, evaluate_event
from .footprint import normalize_event_day
from .ingest import (
    GroundTruthDay,
    Hotspot,
    RasterGrid,
    WEATHER_VARS,
    load_raster,
    parse_ground_truth,
    parse_hotspots,
    parse_stations,
    write_ground_truth,
)
from .perception import render_script
from .spatial_store import CountyFeature, counties_intersecting, load_counties

RECOMMENDATIONS_FILE = "recommendations.jsonl"
AUDIT_FILE = "audit.jsonl"
REPORT_CSV = "report.csv"
REPORT_JSON = "report.json"


@dataclass
class DataLayers:
    stations: list
    counties: list[CountyFeature]
    landcover: RasterGrid | None
    population: RasterGrid | None
    risk_mapping: dict[int, str] | None


def load_layers(cfg: RunConfig, strict: bool = False) -> DataLayers:
    missing = []
    with open(cfg.resolve(cfg.paths.stations)) as fh:
        stations = parse_stations(fh)
    with open(cfg.resolve(cfg.paths.counties)) as fh:
        counties = load_counties(fh)

    landcover = population = None
    lc_path = cfg.resolve(cfg.paths.landcover)
    if lc_path.exists():
        with open(lc_path) as fh:
            landcover = load_raster(fh)
    else:
        missing.append(str(lc_path))
    pop_path = cfg.resolve(cfg.paths.population)
    if pop_path.exists():
        with open(pop_path) as fh:
            population = load_raster(fh)
    else:
        missing.append(str(pop_path))
    if strict and missing:
        raise InputError("missing data layers: " + ", ".join(missing))

    risk_mapping = None
    if cfg.paths.landcover_risk:
        with open(cfg.resolve(cfg.paths.landcover_risk)) as fh:
            risk_mapping = load_landcover_risk(fh)
    return DataLayers(stations=stations, counties=counties, landcover=landcover,
                      population=population, risk_mapping=risk_mapping)


def load_fire_hotspots(cfg: RunConfig, fire_id: str) -> dict[dt.date, list[Hotspot]]:
    path = cfg.resolve(cfg.paths.fires_dir) / fire_id / "hotspots.csv"
    if not path.exists():
        raise InputError(f"hotspot file not found: {path}")
    with open(path) as fh:
        hotspots = parse_hotspots(fh)
    by_date: dict[dt.date, list[Hotspot]] = {}
    for h in hotspots:
        by_date.setdefault(h.acq_date, []).append(h)
    return by_date


def load_weather_grids(cfg: RunConfig, date: dt.date,
                       strict: bool = False) -> dict[str, RasterGrid]:
    """Per-variable grids for one day; missing files simply drop the variable."""
    grids: dict[str, RasterGrid] = {}
    missing = []
    base = cfg.resolve(cfg.paths.weather_dir)
    for var in WEATHER_VARS:
        path = base / f"{date.isoformat()}_{var}.asc"
        if not path.exists():
            missing.append(str(path))
            continue
        with open(path) as fh:
            grids[var] = load_raster(fh)
    if strict and missing:
        raise InputError("missing weather files: " + ", ".join(missing))
    ref = next(iter(grids.values()), None)
    for var, g in grids.items():
        if ref is not None and not g.same_georef(ref):
            raise AlignmentError(f"weather grid '{var}' for {date} is not aligned")
    return grids


def load_truth(cfg: RunConfig) -> dict[str, list[GroundTruthDay]]:
    path = cfg.resolve(cfg.paths.ground_truth)
    if not path.exists():
        return {}
    with open(path) as fh:
        return parse_ground_truth(fh)


def build_day_context(cfg: RunConfig, fire_id: str, date: dt.date,
                      hotspots: list[Hotspot], layers: DataLayers,
                      weather: dict[str, RasterGrid]) -> EventDayContext:
    """Cluster, enrich, and consolidate one event day (no anchors attached)."""
    geometry = normalize_event_day(date, hotspots, eps_m=cfg.params.eps_m,
                                   min_pts=cfg.params.min_pts)
    features = []
    for cluster in geometry.clusters:
        terrain = (terrain_profile(layers.landcover, cluster.footprint, layers.risk_mapping)
                   if layers.landcover is not None else TerrainProfile())
        if layers.population is not None:
            exp = exposure_profile(cluster.footprint, layers.population, layers.counties)
        else:
            hit = counties_intersecting(cluster.footprint, layers.counties)
            exp = ExposureProfile(population=None, density=None,
                                  counties=tuple(c.county_id for c in hit))
        features.append(consolidate_cluster(
            cluster,
            weather=weather_fusion_partial(list(cluster.members), weather),
            terrain=terrain,
            exposure=exp,
            access=station_coverage(cluster.centroid, layers.stations,
                                    density_radius_m=cfg.params.station_radius_km * 1000.0),
        ))
    return EventDayContext(fire_id=fire_id,
                           snapshot=global_snapshot(date, features),
                           clusters=tuple(features))


def event_dates(cfg: RunConfig, fire_id: str,
                hotspots_by_date: dict[dt.date, list[Hotspot]],
                truth: dict[str, list[GroundTruthDay]]) -> list[dt.date]:
    """Ground-truth dates drive the loop when present; else hotspot dates."""
    if fire_id in truth:
        return [t.date for t in truth[fire_id]]
    return sorted(hotspots_by_date)


def _attach_anchors(cfg: RunConfig, context: EventDayContext,
                    fire_obs: list[DayObservation],
                    resource_obs: list[ResourceObservation]) -> EventDayContext:
    if not fire_obs:
        return context
    snap = context.snapshot
    today = DayObservation(date=snap.date, points=float(snap.total_points),
                           frp=snap.total_frp, area=snap.total_area_acres)
    anchors = temporal_anchors(fire_obs, today, resource_obs,
                               rel_threshold=cfg.params.delta_threshold)
    return dataclasses.replace(context, anchors=anchors)


def make_client(cfg: RunConfig) -> CompletionClient:
    kind = cfg.client.kind
    if kind == "mock":
        return MockCompletionClient()
    if kind == "replay":
        if not cfg.client.replay_path:
            raise InputError("replay client requires client.replay_path")
        return ReplayClient(cfg.resolve(cfg.client.replay_path))
    if kind == "live":
        if not cfg.client.endpoint or not cfg.client.model:
            raise InputError("live client requires client.endpoint and client.model")
        return LiveClient(endpoint=cfg.client.endpoint, model=cfg.client.model,
                          api_key_env=cfg.client.api_key_env,
                          timeout_s=cfg.client.timeout_s,
                          max_concurrent=cfg.client.max_concurrent)
    raise InputError(f"unknown client kind {kind!r}")


@dataclass
class RunSummary:
    fire_id: str
    n_days: int
    fallbacks: int
    report: EventReport | None
    out_dir: Path


def run_event(cfg: RunConfig, fire_id: str, client: CompletionClient,
              out_dir: Path) -> RunSummary:
    """Sequential Day-1 + Incremental loop over one fire; writes all outputs."""
    require_paths(cfg, "stations", "counties")
    layers = load_layers(cfg)
    hotspots_by_date = load_fire_hotspots(cfg, fire_id)
    truth = load_truth(cfg)
    corpus = load_corpus(cfg.resolve(cfg.paths.corpus_dir))
    dates = event_dates(cfg, fire_id, hotspots_by_date, truth)
    if not dates:
        raise InputError(f"no event days found for {fire_id}")

    out_dir.mkdir(parents=True, exist_ok=True)
    rec_lines: list[str] = []
    audit_lines: list[str] = []
    fire_obs: list[DayObservation] = []
    resource_obs: list[ResourceObservation] = []
    contexts: list[EventDayContext] = []
    prev_rec = None
    prev_snapshot = None
    cumulative_cost = 0.0
    cumulative_personnel = 0.0
    fallbacks = 0

    for i, date in enumerate(dates):
        weather = load_weather_grids(cfg, date)
        context = build_day_context(cfg, fire_id, date, hotspots_by_date.get(date, []),
                                    layers, weather)
        context = _attach_anchors(cfg, context, fire_obs, resource_obs)
        mode = "day1" if i == 0 else "incremental"
        cumulative = agent_mod.CumulativeTotals(
            days_since_start=i, cost_musd=cumulative_cost,
            personnel_days=cumulative_personnel)
        result = agent_mod.recommend_day(
            context, corpus, client, mode,
            prev=prev_rec, prev_snapshot=prev_snapshot,
            cumulative=cumulative if mode == "incremental" else None,
            history=list(contexts),
            top_k=cfg.params.top_k_clusters,
            analog_k=cfg.params.analog_k,
            weights=cfg.weights(),
            slack=(cfg.params.bound_slack_low, cfg.params.bound_slack_high),
            max_attempts=cfg.client.max_attempts,
        )
        rec = result.recommendation
        fallbacks += 1 if result.fallback else 0

        rec_lines.append(canonical_json({
            "fire_id": fire_id,
            "date": date.isoformat(),
            "mode": mode,
            "personnel": rec.personnel,
            "daily_budget_usd": rec.daily_budget_usd,
            "confidence": rec.confidence,
            "indicators": rec.indicators,
            "fallback": result.fallback,
        }).strip())
        audit_lines.append(canonical_json(
            result.audit_record(fire_id, date, mode)).strip())

        snap = context.snapshot
        fire_obs.append(DayObservation(date=date, points=float(snap.total_points),
                                       frp=snap.total_frp, area=snap.total_area_acres))
        resource_obs.append(ResourceObservation(date=date, personnel=float(rec.personnel),
                                                cost=rec.daily_budget_usd / 1e6))
        cumulative_cost += rec.daily_budget_usd / 1e6
        cumulative_personnel += rec.personnel
        contexts.append(context)
        prev_rec = rec
        prev_snapshot = snap

    (out_dir / RECOMMENDATIONS_FILE).write_text("\n".join(rec_lines) + "\n")
    (out_dir / AUDIT_FILE).write_text("\n".join(audit_lines) + "\n")
    (out_dir / "effective_config.toml").write_text(cfg.dump())

    report = None
    if fire_id in truth:
        predictions = [DayPrediction(date=r.date, personnel=r.personnel, budget_usd=r.cost * 1e6)
                       for r in resource_obs]
        report = evaluate_event(fire_id, predictions, truth[fire_id])
        (out_dir / REPORT_CSV).write_text(emit_report([report], "csv"))
        (out_dir / REPORT_JSON).write_text(emit_report([report], "json"))
    return RunSummary(fire_id=fire_id, n_days=len(dates), fallbacks=fallbacks,
                      report=report, out_dir=out_dir)


def build_corpus(cfg: RunConfig) -> Path:
    """Materialize the historical corpus: contexts, stats sidecar, ground truth."""
    if not cfg.corpus_fires:
        raise InputError("no [corpus] fires configured")
    require_paths(cfg, "stations", "counties", "ground_truth")
    layers = load_layers(cfg, strict=True)
    truth = load_truth(cfg)
    corpus_dir = cfg.resolve(cfg.paths.corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)

    by_fire: dict[str, list[EventDayContext]] = {}
    for fire_id in cfg.corpus_fires:
        if fire_id not in truth:
            raise InputError(f"corpus fire {fire_id} has no ground truth")
        hotspots_by_date = load_fire_hotspots(cfg, fire_id)
        fire_obs: list[DayObservation] = []
        resource_obs: list[ResourceObservation] = []
        contexts: list[EventDayContext] = []
        for day in truth[fire_id]:
            weather = load_weather_grids(cfg, day.date, strict=True)
            context = build_day_context(cfg, fire_id, day.date,
                                        hotspots_by_date.get(day.date, []), layers, weather)
            context = _attach_anchors(cfg, context, fire_obs, resource_obs)
            write_context(corpus_dir, context)
            snap = context.snapshot
            fire_obs.append(DayObservation(date=day.date, points=float(snap.total_points),
                                           frp=snap.total_frp, area=snap.total_area_acres))
            resource_obs.append(ResourceObservation(date=day.date,
                                                    personnel=float(day.personnel),
                                                    cost=day.daily_cost))
            contexts.append(context)
        by_fire[fire_id] = contexts

    corpus_truth = {fid: truth[fid] for fid in cfg.corpus_fires}
    with open(corpus_dir / "ground_truth.csv", "w") as fh:
        write_ground_truth(corpus_truth, fh)
    save_stats(corpus_dir, corpus_stats(corpus_raw_rows(by_fire)))
    return corpus_dir


def perceive_day(cfg: RunConfig, fire_id: str, date: dt.date):
    """(script, context) for one day, with anchors when prior days exist."""
    require_paths(cfg, "stations", "counties")
    layers = load_layers(cfg)
    hotspots_by_date = load_fire_hotspots(cfg, fire_id)
    truth = load_truth(cfg)
    dates = [d for d in event_dates(cfg, fire_id, hotspots_by_date, truth) if d <= date]
    if not dates or dates[-1] != date:
        dates = sorted(set(dates) | {date})

    fire_obs: list[DayObservation] = []
    resource_obs: list[ResourceObservation] = []
    truth_map = {t.date: t for t in truth.get(fire_id, [])}
    context = prev_snapshot = None
    for day in dates:
        weather = load_weather_grids(cfg, day)
        ctx = build_day_context(cfg, fire_id, day, hotspots_by_date.get(day, []),
                                layers, weather)
        ctx = _attach_anchors(cfg, ctx, fire_obs, resource_obs)
        if day == date:
            context = ctx
            break
        snap = ctx.snapshot
        fire_obs.append(DayObservation(date=day, points=float(snap.total_points),
                                       frp=snap.total_frp, area=snap.total_area_acres))
        if day in truth_map:
            resource_obs.append(ResourceObservation(
                date=day, personnel=float(truth_map[day].personnel),
                cost=truth_map[day].daily_cost))
        prev_snapshot = snap

    script = render_script(context, top_k=cfg.params.top_k_clusters,
                           prev_snapshot=prev_snapshot)
    return script, context


def read_predictions(path: Path) -> dict[str, list[DayPrediction]]:
    """Parse a recommendations JSONL file into per-fire prediction series."""
    out: dict[str, list[DayPrediction]] = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        out.setdefault(doc["fire_id"], []).append(DayPrediction(
            date=dt.date.fromisoformat(doc["date"]),
            personnel=float(doc["personnel"]),
            budget_usd=float(doc["daily_budget_usd"]),
        ))
    for series in out.values():
        series.sort(key=lambda p: p.date)
    return out

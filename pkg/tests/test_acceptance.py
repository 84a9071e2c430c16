"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.
"""

import dataclasses
import json
import math
import random
import subprocess
import sys
import time

import pytest

from firesight.analogs import CorpusEntry, FeatureVector, NUMERIC_FEATURES, retrieve_analogs, weighted_cosine
from firesight.agent import Recommendation, validate_output
from firesight.analogs import AnalogBounds
from firesight.baselines import PhysicalModel, calibrate_linear, flame_length, physical_predict
from firesight.consolidation import global_snapshot
from firesight.enrichment import classify_composition, shannon_diversity, terrain_profile
from firesight.evaluation import mae, rmse
from firesight.footprint import dbscan_indices
from firesight.geometry import GeoPoint, Polygon
from firesight.ingest import RasterGrid
from firesight.perception import render_script
from firesight.spatial_store import geodesic_distance, zonal_composition, zonal_sum

from mutants import conformant_doc, mutants
from oracles import brute_dbscan, brute_retrieve, brute_zonal, flood_patches

import datetime as dt

N_FEATURES = len(NUMERIC_FEATURES)


def _announce(name):
    print(f"\nACCEPTANCE PASS: {name}")


def test_c01_dbscan_oracle_equivalence():
    rng = random.Random(10_001)
    started = time.monotonic()
    for case in range(100):
        n = rng.randint(2, 200)
        spread = rng.uniform(0.05, 0.4)
        points = [(round(rng.uniform(37.0 - spread, 37.0 + spread), 6),
                   round(rng.uniform(-122.0 - spread, -122.0 + spread), 6))
                  for _ in range(n)]
        clusters, noise = dbscan_indices(points, 3000.0, 3)
        expect, expect_noise = brute_dbscan(points, 3000.0, 3)
        assert {frozenset(c) for c in clusters} == expect, f"case {case}"
        assert frozenset(noise) == expect_noise, f"case {case}"
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"took {elapsed:.2f}s"
    _announce(f"DBSCAN oracle equivalence (100 cases, {elapsed:.2f}s)")


def test_c02_zonal_statistics_brute_force():
    rng = random.Random(10_002)
    cases = 0
    while cases < 100:
        rows, cols = rng.randint(3, 20), rng.randint(3, 20)
        cell = rng.choice([0.02, 0.05, 0.1])
        values = [float(rng.choice([-9999, 1, 2, 3, 11, 41, 42, 71]))
                  for _ in range(rows * cols)]
        grid = RasterGrid(37.0, -122.0, cell, rows, cols, tuple(values))
        ring = []
        for _ in range(rng.randint(3, 7)):
            ring.append(GeoPoint(rng.uniform(37.0 - rows * cell - 0.05, 37.05),
                                 rng.uniform(-122.05, -122.0 + cols * cell + 0.05)))
        try:
            from firesight.geometry import convex_hull
            hull = convex_hull(ring)
            if len(hull) < 3:
                continue
            poly = Polygon.from_open_ring(hull)
        except ValueError:
            continue
        total, covered, counts = brute_zonal(grid, [(p.lon, p.lat) for p in poly.coords])
        zs = zonal_sum(grid, poly)
        assert zs.total == total and zs.covered_cells == covered
        zc = zonal_composition(grid, poly)
        if covered:
            assert zc.proportions == {cls: n / covered for cls, n in counts.items()}
            assert abs(sum(zc.proportions.values()) - 1.0) <= 1e-12
        else:
            assert zc.coverage_warning
        cases += 1
    _announce("zonal statistics equal per-cell brute force (100 cases)")


def test_c03_geodesic_sanity():
    d = geodesic_distance(GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0))
    assert abs(d - 111_195.0) <= 1.0
    rng = random.Random(10_003)
    pts = [GeoPoint(rng.uniform(-80, 80), rng.uniform(-179, 179)) for _ in range(1002)]
    for i in range(1000):
        a, b = pts[i], pts[i + 1]
        assert geodesic_distance(a, b) == geodesic_distance(b, a)
        assert geodesic_distance(a, b) >= 0.0
    for i in range(0, 999, 3):
        a, b, c = pts[i], pts[i + 1], pts[i + 2]
        assert geodesic_distance(a, c) <= geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-6
    _announce("geodesic distance sanity (1 deg arc, symmetry, triangle inequality)")


def test_c04_shannon_and_terrain():
    for n in range(2, 30):
        comp = {i: 1.0 / n for i in range(n)}
        assert abs(shannon_diversity(comp) - math.log(n)) <= 1e-12

    size = 4
    values = [41.0 if (r + c) % 2 == 0 else 71.0 for r in range(size) for c in range(size)]
    grid = RasterGrid(37.0, -122.0, 0.1, size, size, tuple(values))
    poly = Polygon.from_open_ring([GeoPoint(36.55, -122.05), GeoPoint(36.55, -121.55),
                                   GeoPoint(37.05, -121.55), GeoPoint(37.05, -122.05)])
    profile = terrain_profile(grid, poly)
    cells = {(r, c): int(values[r * size + c]) for r in range(size) for c in range(size)}
    assert profile.fragmentation == flood_patches(cells) / (size * size) == 1.0

    rng = random.Random(10_004)
    codes = [11, 12, 21, 22, 23, 24, 31, 41, 42, 43, 52, 71, 81, 82, 90, 95]
    for _ in range(1000):
        raw = {rng.choice(codes): rng.uniform(0.01, 1.0) for _ in range(rng.randint(1, 8))}
        total = sum(raw.values())
        comp = {k: v / total for k, v in raw.items()}
        _, _, spread = classify_composition(comp)
        assert -1e-12 <= spread <= 1.0 + 1e-12
    _announce("shannon ln(n), checkerboard fragmentation, spread potential in [0,1]")


def test_c05_perception_shuffle_invariance(cfg, dataset):
    from firesight import pipeline
    layers = pipeline.load_layers(cfg)
    hotspots_by_date = pipeline.load_fire_hotspots(cfg, "DELTA")
    truth = pipeline.load_truth(cfg)
    dates = pipeline.event_dates(cfg, "DELTA", hotspots_by_date, truth)
    assert len(dates) == 10

    rng = random.Random(10_005)
    shuffles_done = 0
    fire_obs, resource_obs = [], []
    from firesight.consolidation import DayObservation, ResourceObservation
    prev_snapshot = None
    for date in dates:
        weather = pipeline.load_weather_grids(cfg, date)
        day_hotspots = hotspots_by_date.get(date, [])
        context = pipeline.build_day_context(cfg, "DELTA", date, day_hotspots, layers, weather)
        context = pipeline._attach_anchors(cfg, context, fire_obs, resource_obs)
        baseline = render_script(context, prev_snapshot=prev_snapshot).text

        for _ in range(5):
            shuffled = day_hotspots[:]
            rng.shuffle(shuffled)
            ctx2 = pipeline.build_day_context(cfg, "DELTA", date, shuffled, layers, weather)
            view = list(ctx2.clusters)
            rng.shuffle(view)
            ctx2 = dataclasses.replace(ctx2, clusters=tuple(view),
                                       snapshot=global_snapshot(date, view),
                                       anchors=context.anchors)
            assert render_script(ctx2, prev_snapshot=prev_snapshot).text == baseline, date
            shuffles_done += 1

        snap = context.snapshot
        fire_obs.append(DayObservation(date=date, points=float(snap.total_points),
                                       frp=snap.total_frp, area=snap.total_area_acres))
        t = {x.date: x for x in truth["DELTA"]}[date]
        resource_obs.append(ResourceObservation(date=date, personnel=float(t.personnel),
                                                cost=t.daily_cost))
        prev_snapshot = snap
    assert shuffles_done == 50
    _announce("perception script byte-identical under 50 shuffles x 10 fixture days")


def test_c06_analog_retrieval_equivalence():
    rng = random.Random(10_006)
    for case in range(100):
        n = rng.randint(20, 1000)
        corpus = []
        for _ in range(n):
            vec = FeatureVector(
                values=tuple(rng.uniform(-3, 3) for _ in range(N_FEATURES)),
                flags=(rng.randint(0, 1), rng.randint(0, 1)))
            corpus.append(CorpusEntry(
                fire_id=f"F{rng.randint(0, 29)}",
                date=dt.date(2020, 1, 1) + dt.timedelta(days=rng.randint(0, 300)),
                vector=vec, personnel=rng.uniform(10, 2000), daily_cost=rng.uniform(0.1, 9)))
        query = FeatureVector(values=tuple(rng.uniform(-3, 3) for _ in range(N_FEATURES)),
                              flags=(rng.randint(0, 1), rng.randint(0, 1)))
        got = retrieve_analogs(query, corpus, k=5)
        expect = brute_retrieve(query.full,
                                [(e.vector.full, e.fire_id, e.date, e.personnel, e.daily_cost)
                                 for e in corpus], 5, (1.0,) * (N_FEATURES + 2))
        assert [(a.fire_id, a.date) for a in got] == expect, f"case {case}"
        fires = [a.fire_id for a in got]
        assert len(fires) == len(set(fires))
        sims = [a.similarity for a in got]
        assert sims == sorted(sims, reverse=True)
        assert weighted_cosine(query, query) == pytest.approx(1.0, abs=1e-12)
    _announce("analog retrieval equals brute-force rank+dedup (100 corpora)")


def test_c07_validator_fuzz_suite():
    bounds = AnalogBounds(personnel=(25.0, 800.0), cost_musd=(0.25, 8.0))
    rng = random.Random(10_007)
    rejected = 0
    while rejected < 100:
        for raw, expected_category in mutants(rng, bounds):
            out = validate_output(raw, bounds)
            assert not isinstance(out, Recommendation), raw
            assert out.category == expected_category, (raw, out)
            rejected += 1
    accepted = 0
    for _ in range(20):
        doc = conformant_doc(rng, bounds)
        assert isinstance(validate_output(json.dumps(doc), bounds), Recommendation)
        accepted += 1
    _announce(f"validator fuzz: {rejected} mutants rejected with correct category, "
              f"{accepted} conformant accepted")


def test_c08_physical_baseline_planted_recovery():
    rng = random.Random(10_008)
    scores = [rng.uniform(0.0, 250.0) for _ in range(60)]
    targets = [3.0 * s + 7.0 for s in scores]
    slope, intercept = calibrate_linear(scores, targets)
    assert abs(slope - 3.0) <= 1e-9 and abs(intercept - 7.0) <= 1e-9
    model = PhysicalModel(calib_personnel=(slope, intercept), calib_cost=(slope, intercept))
    for s, t in zip(scores, targets):
        p, c = physical_predict(model, s)
        assert abs(p - t) <= 1e-6 and abs(c - t) <= 1e-6
    oracle = 0.0775 * math.exp(0.46 * math.log(1000.0))  # 1.8590955...
    assert abs(flame_length(1000.0) - oracle) <= 1e-3
    _announce("physical baseline: planted (3, 7) recovered, flame length vs oracle")


def test_c09_metrics_fixtures_and_dominance():
    pred = [100.0, 120.0, 90.0]
    truth = [110.0, 100.0, 95.0]
    assert mae(pred, truth) == pytest.approx(35.0 / 3.0, abs=1e-12)
    assert rmse(pred, truth) == pytest.approx(math.sqrt(525.0 / 3.0), abs=1e-12)
    pred_c = [1.2, 1.7, 1.5]
    truth_c = [1.0, 2.0, 1.5]
    assert mae(pred_c, truth_c) == pytest.approx(0.5 / 3.0, abs=1e-12)
    assert rmse(pred_c, truth_c) == pytest.approx(math.sqrt(0.13 / 3.0), abs=1e-9)

    rng = random.Random(10_009)
    for _ in range(1000):
        n = rng.randint(1, 30)
        p = [rng.uniform(0, 1000) for _ in range(n)]
        t = [rng.uniform(0, 1000) for _ in range(n)]
        assert rmse(p, t) >= mae(p, t) - 1e-9
    _announce("MAE/RMSE hand fixtures and RMSE >= MAE on 1000 random pairs")


def test_c10_end_to_end_determinism(dataset, tmp_path):
    started = time.monotonic()
    outputs = []
    for label in ("r1", "r2"):
        out = tmp_path / label
        proc = subprocess.run(
            [sys.executable, "-m", "firesight.cli", "--config", str(dataset / "config.toml"),
             "--out-dir", str(out), "run", "--fire-id", "DELTA,ECHO"],
            capture_output=True, text=True, cwd=dataset)
        assert proc.returncode == 0, proc.stderr
        outputs.append(out)
    elapsed = time.monotonic() - started
    for fire in ("DELTA", "ECHO"):
        for name in ("recommendations.jsonl", "audit.jsonl", "report.csv", "report.json"):
            a = (outputs[0] / fire / name).read_bytes()
            b = (outputs[1] / fire / name).read_bytes()
            assert a == b, f"{fire}/{name} differs between invocations"
        n_days = len((outputs[0] / fire / "recommendations.jsonl").read_text().splitlines())
        assert n_days == 10
    assert elapsed < 30.0, f"took {elapsed:.2f}s"
    _announce(f"end-to-end byte-identical across two runs (2 fires x 10 days, {elapsed:.1f}s)")


def test_c11_incremental_prompt_block_fidelity(cfg, dataset, tmp_path):
    from firesight import pipeline
    from firesight.agent import CumulativeTotals, recommend_day
    from firesight.analogs import load_corpus
    from firesight.clients import MockCompletionClient

    corpus = load_corpus(dataset / "corpus")
    layers = pipeline.load_layers(cfg)
    hotspots = pipeline.load_fire_hotspots(cfg, "ECHO")
    truth = pipeline.load_truth(cfg)
    dates = pipeline.event_dates(cfg, "ECHO", hotspots, truth)

    from firesight.consolidation import DayObservation, ResourceObservation
    client = MockCompletionClient()
    fire_obs, resource_obs, contexts = [], [], []
    prev = prev_snapshot = None
    cumulative_cost = cumulative_personnel = 0.0
    result = None
    for i, date in enumerate(dates[:3]):
        weather = pipeline.load_weather_grids(cfg, date)
        ctx = pipeline.build_day_context(cfg, "ECHO", date, hotspots.get(date, []),
                                         layers, weather)
        ctx = pipeline._attach_anchors(cfg, ctx, fire_obs, resource_obs)
        mode = "day1" if i == 0 else "incremental"
        result = recommend_day(
            ctx, corpus, client, mode, prev=prev, prev_snapshot=prev_snapshot,
            cumulative=(CumulativeTotals(i, cumulative_cost, cumulative_personnel)
                        if mode == "incremental" else None),
            history=list(contexts))
        snap = ctx.snapshot
        fire_obs.append(DayObservation(date, float(snap.total_points), snap.total_frp,
                                       snap.total_area_acres))
        resource_obs.append(ResourceObservation(date, float(result.recommendation.personnel),
                                                result.recommendation.daily_budget_usd / 1e6))
        cumulative_cost += result.recommendation.daily_budget_usd / 1e6
        cumulative_personnel += result.recommendation.personnel
        contexts.append(ctx)
        prev = result.recommendation
        prev_snapshot = snap

    user_text = result.prompt.user_text
    for header in ("## Previous Analysis Context", "## Cumulative Context",
                   "## Fire Intensity Rolling Metrics", "## Fire Overview vs Yesterday",
                   "## Affected Areas vs Yesterday", "## Historical Context (RAG)",
                   "## Cluster Details"):
        assert header in user_text, header
    _announce("incremental prompt contains every required block header")

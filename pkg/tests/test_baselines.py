import datetime as dt
import math
import random

import pytest

from firesight.baselines import (
    PhysicalModel,
    calibrate_linear,
    day_workload_score,
    fireline_intensity,
    fit_physical,
    flame_length,
    nwcg_class,
    persistence_predict,
    physical_predict,
    workload_score,
)
from firesight.errors import DegenerateFitError, PreconditionError
from firesight.geometry import GeoPoint, Polygon, geodesic_perimeter_m
from firesight.ingest import GroundTruthDay

# 0.0775 * 1000**0.46, computed independently via exp/log
FLAME_AT_1000 = 1.8590955122401054


def test_fireline_intensity_unit_chain():
    assert fireline_intensity(100.0, 10_000.0, kappa=10.0) == pytest.approx(100.0)
    assert fireline_intensity(0.0, 5_000.0) == 0.0
    base = fireline_intensity(80.0, 7_000.0)
    assert fireline_intensity(80.0, 14_000.0) == pytest.approx(base / 2.0)
    with pytest.raises(PreconditionError):
        fireline_intensity(10.0, 0.0)


def test_flame_length_values_and_monotonicity():
    assert flame_length(0.0) == 0.0
    oracle = 0.0775 * math.exp(0.46 * math.log(1000.0))
    assert flame_length(1000.0) == pytest.approx(oracle, abs=1e-9)
    assert flame_length(1000.0) == pytest.approx(FLAME_AT_1000, abs=1e-3)
    prev = 0.0
    for i_kw in (1.0, 10.0, 100.0, 1000.0, 10_000.0):
        cur = flame_length(i_kw)
        assert cur > prev
        prev = cur


def test_nwcg_class_ladder():
    assert nwcg_class(0.5) == 1
    assert nwcg_class(flame_length(1000.0)) == 2   # ~1.86 m
    assert nwcg_class(1.2192) == 2                 # 4 ft boundary rounds up
    assert nwcg_class(2.4384) == 3
    assert nwcg_class(3.3528) == 4
    assert nwcg_class(10.0) == 4
    ladder = [nwcg_class(x / 10.0) for x in range(0, 60)]
    assert ladder == sorted(ladder)


def test_workload_score_formula():
    assert workload_score(10_000.0, 2, 1) == pytest.approx(20.0)
    assert workload_score(10_000.0, 2, 3) == pytest.approx(24.0)
    assert workload_score(10_000.0, 2, 0) == 0.0


def test_calibrate_exact_line():
    slope, intercept = calibrate_linear([1.0, 2.0], [2.0, 4.0])
    assert slope == pytest.approx(2.0) and intercept == pytest.approx(0.0)


def test_calibrate_recovers_planted_coefficients():
    rng = random.Random(55)
    scores = [rng.uniform(0, 100) for _ in range(40)]
    targets = [3.0 * s + 7.0 for s in scores]
    slope, intercept = calibrate_linear(scores, targets)
    assert slope == pytest.approx(3.0, abs=1e-9)
    assert intercept == pytest.approx(7.0, abs=1e-9)
    model = PhysicalModel(calib_personnel=(slope, intercept), calib_cost=(slope, intercept))
    for s in scores:
        p, c = physical_predict(model, s)
        assert p == pytest.approx(3.0 * s + 7.0, abs=1e-6)


def test_calibrate_rejects_constant_scores():
    with pytest.raises(DegenerateFitError):
        calibrate_linear([5.0, 5.0, 5.0], [1.0, 2.0, 3.0])


def test_physical_predict_clamps_at_zero():
    model = PhysicalModel(calib_personnel=(2.0, -50.0), calib_cost=(1.0, -10.0))
    assert physical_predict(model, 0.0) == (0.0, 0.0)
    assert physical_predict(model, 30.0) == (10.0, 20.0)


def test_model_round_trips_to_disk(tmp_path):
    model = PhysicalModel(calib_personnel=(3.5, 12.0), calib_cost=(0.01, 0.2))
    model.save(tmp_path / "model.json")
    assert PhysicalModel.load(tmp_path / "model.json") == model


def test_persistence_predict():
    history = [GroundTruthDay("F", dt.date(2020, 8, 1), 300, 0.9),
               GroundTruthDay("F", dt.date(2020, 8, 2), 400, 1.2)]
    assert persistence_predict(history) == (400.0, 1.2)
    assert persistence_predict(history[:1]) == (300.0, 0.9)
    assert persistence_predict(history) == persistence_predict(history)
    with pytest.raises(PreconditionError):
        persistence_predict([])


def test_square_perimeter_consistency():
    side_deg = 0.01
    ring = [GeoPoint(0.0, 0.0), GeoPoint(0.0, side_deg),
            GeoPoint(side_deg, side_deg), GeoPoint(side_deg, 0.0)]
    poly = Polygon.from_open_ring(ring)
    side_m = side_deg * 111_195.08
    assert geodesic_perimeter_m(poly) == pytest.approx(4 * side_m, rel=1e-3)


def test_day_workload_from_contexts(cfg, dataset):
    from firesight import pipeline
    layers = pipeline.load_layers(cfg)
    hotspots = pipeline.load_fire_hotspots(cfg, "ALPHA")
    date = sorted(hotspots)[2]
    ctx = pipeline.build_day_context(cfg, "ALPHA", date, hotspots[date], layers,
                                     pipeline.load_weather_grids(cfg, date))
    assert day_workload_score(ctx) > 0
    empty = pipeline.build_day_context(cfg, "ALPHA", date, [], layers, {})
    assert day_workload_score(empty) == 0.0


def test_fit_physical_on_corpus(cfg, dataset):
    import json as _json
    from firesight.analogs import _context_files
    from firesight.consolidation import context_from_dict
    from firesight.pipeline import load_truth

    contexts = [context_from_dict(_json.loads(p.read_text()))
                for p in _context_files(dataset / "corpus")]
    truth = [t for series in load_truth(cfg).values() for t in series]
    model = fit_physical(contexts, truth)
    score = day_workload_score(contexts[0])
    p, c = physical_predict(model, score)
    assert p >= 0.0 and c >= 0.0

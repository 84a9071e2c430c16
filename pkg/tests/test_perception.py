import dataclasses
import datetime as dt
import random

import pytest

from firesight.consolidation import EventDayContext, global_snapshot
from firesight.enrichment import FusedWeather
from firesight.errors import SchemaError, UnitLockError
from firesight.perception import fmt1, na_policy, render_script, unit_lock

from test_consolidation import make_features

D = dt.date(2020, 8, 17)


def context_of(clusters, fire_id="TEST", anchors=None):
    return EventDayContext(fire_id=fire_id, snapshot=global_snapshot(D, clusters),
                           clusters=tuple(clusters), anchors=anchors)


def test_unit_lock_passes_kelvin():
    ctx = context_of([make_features(0, 10.0)])
    assert unit_lock(ctx) is ctx
    assert "tmax=305.0" in render_script(ctx).text


def test_unit_lock_rejects_celsius_smell():
    bad = FusedWeather(bi=40.0, tmax=35.0, tmin=20.0, wind=4.0, fm1=8.0)
    ctx = context_of([make_features(0, 10.0, weather=bad)])
    with pytest.raises(UnitLockError) as err:
        unit_lock(ctx)
    assert "tmax" in err.value.slot


def test_converted_celsius_passes():
    w = FusedWeather(bi=40.0, tmax=25.0 + 273.15, tmin=10.0 + 273.15, wind=4.0, fm1=8.0)
    ctx = context_of([make_features(0, 10.0, weather=w)])
    assert "298.1" in render_script(ctx).text


def test_top_k_selection_by_sum_frp():
    clusters = [make_features(i, frp) for i, frp in enumerate([5.0, 70.0, 10.0, 55.0,
                                                               30.0, 20.0, 60.0])]
    script = render_script(context_of(clusters), top_k=5)
    assert script.k_used == 5
    assert script.text.count("- Cluster ") == 5
    # the five largest FRPs appear, the two smallest do not
    for frp in (70.0, 60.0, 55.0, 30.0, 20.0):
        assert f"frp={frp:.1f}" in script.text
    for frp in (10.0, 5.0):
        assert f"frp={frp:.1f}" not in script.text


def test_cluster_sections_ordered_by_consequence():
    clusters = [make_features(0, 10.0), make_features(1, 90.0)]
    text = render_script(context_of(clusters)).text
    assert text.index("frp=90.0") < text.index("frp=10.0")


def test_missing_fm1_renders_na():
    w = FusedWeather(bi=40.0, tmax=305.0, tmin=288.0, wind=4.0, fm1=None)
    ctx = context_of([make_features(0, 10.0, weather=w)])
    script = render_script(ctx)
    assert "FM1=NA" in script.text
    assert "overview.weather.fm1" in script.na_fields


def test_missing_population_renders_na():
    clusters = [make_features(0, 10.0, population=None)]
    script = render_script(context_of(clusters))
    assert "- Total Population Affected: NA" in script.text
    assert "pop=NA" in script.text


def test_na_terrain_block():
    script = render_script(context_of([make_features(0, 10.0)]))
    assert "terrain[NA]" in script.text  # make_features uses the NA profile


def test_empty_day_renders_all_sections():
    script = render_script(context_of([]))
    for header in ("## Fire Overview", "## Affected Areas", "## Cluster Details"):
        assert header in script.text
    assert "- none (no active clusters)" in script.text
    assert "Weather conditions: BI=NA" in script.text


def test_slot_headers_appear_exactly_once():
    ctx = context_of([make_features(0, 10.0)])
    text = render_script(ctx).text
    for line in ("## Fire Overview", "## Affected Areas", "## Cluster Details",
                 "- Current date:", "- Total Fire Points:", "- Num Clusters:",
                 "- Total FRP:", "- Total area:", "- Max FRP/Brightness:",
                 "- Median/P95 FRP per cluster:", "- Weather conditions:",
                 "- Counties:", "- Total Population Affected:",
                 "- Fire stations in area:", "- Nearest station:"):
        assert text.count(line) == 1, line


def test_vs_yesterday_variant_with_deltas():
    prev = global_snapshot(D - dt.timedelta(days=1), [make_features(0, 8.0, point_count=2)])
    ctx = context_of([make_features(0, 10.0, point_count=4)])
    text = render_script(ctx, prev_snapshot=prev).text
    assert "## Fire Overview vs Yesterday" in text
    assert "## Affected Areas vs Yesterday" in text
    assert "- Total Fire Points: 4 (up 2)" in text
    assert "(up 2.0, 25%)" in text  # total FRP 8 -> 10 with percent


def test_render_determinism_and_shuffle_invariance():
    rng = random.Random(99)
    clusters = [make_features(i, 5.0 + 13.7 * i, population=50.0 * i) for i in range(6)]
    ctx = context_of(clusters)
    baseline = render_script(ctx).text
    for _ in range(25):
        view = clusters[:]
        rng.shuffle(view)
        shuffled = dataclasses.replace(ctx, snapshot=global_snapshot(D, view),
                                       clusters=tuple(view))
        assert render_script(shuffled).text == baseline


def test_na_policy_rules():
    assert na_policy("overview.weather.wind", None) == "NA"
    assert na_policy("overview.weather.wind", 3.456) == "3.5"
    assert na_policy("cluster[2].population", None, fmt1) == "NA"
    with pytest.raises(SchemaError):
        na_policy("overview.moon_phase", 1.0)


def test_fmt1_normalizes_negative_zero():
    assert fmt1(-0.0) == "0.0"
    assert fmt1(0.04) == "0.0"

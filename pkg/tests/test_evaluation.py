import datetime as dt
import math

import pytest
from hypothesis import given, strategies as st

from firesight.errors import AlignmentError, PreconditionError
from firesight.evaluation import (
    DayPrediction,
    emit_report,
    evaluate_event,
    mae,
    report_from_json,
    rmse,
)
from firesight.ingest import GroundTruthDay

D0 = dt.date(2020, 8, 17)


def truth_series(fire_id, values):
    return [GroundTruthDay(fire_id, D0 + dt.timedelta(days=i), p, c)
            for i, (p, c) in enumerate(values)]


def predictions(values):
    return [DayPrediction(D0 + dt.timedelta(days=i), p, b)
            for i, (p, b) in enumerate(values)]


def test_mae_examples():
    assert mae([3.0, 5.0], [4.0, 4.0]) == 1.0
    assert mae([0.0, 4.0], [0.0, 0.0]) == 2.0
    assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0


def test_rmse_examples():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert rmse([0.0, 4.0], [0.0, 0.0]) == pytest.approx(2.8284271247461903, abs=1e-12)


def test_metric_length_mismatch():
    with pytest.raises(PreconditionError):
        mae([1.0], [1.0, 2.0])
    with pytest.raises(PreconditionError):
        rmse([], [])


@given(st.lists(st.tuples(st.floats(0, 1e4), st.floats(0, 1e4)), min_size=1, max_size=40))
def test_rmse_dominates_mae(pairs):
    pred = [p for p, _ in pairs]
    truth = [t for _, t in pairs]
    assert rmse(pred, truth) >= mae(pred, truth) - 1e-9


def test_metrics_invariant_to_day_order():
    pred = [10.0, 20.0, 30.0]
    truth = [12.0, 18.0, 33.0]
    assert mae(pred, truth) == pytest.approx(mae(pred[::-1], truth[::-1]))
    assert rmse(pred, truth) == pytest.approx(rmse(pred[::-1], truth[::-1]))


def test_evaluate_perfect_predictions():
    truth = truth_series("F", [(100, 1.0), (200, 2.0)])
    preds = predictions([(100.0, 1.0e6), (200.0, 2.0e6)])
    report = evaluate_event("F", preds, truth)
    assert report.mae_personnel == 0.0 and report.rmse_cost == 0.0
    assert report.n_days == 2


def test_evaluate_hand_computed_three_days():
    truth = truth_series("F", [(110, 1.0), (100, 2.0), (95, 1.5)])
    preds = predictions([(100.0, 1.2e6), (120.0, 1.7e6), (90.0, 1.5e6)])
    report = evaluate_event("F", preds, truth)
    assert report.mae_personnel == pytest.approx(35.0 / 3.0)             # (10+20+5)/3
    assert report.rmse_personnel == pytest.approx(math.sqrt(525.0 / 3.0))  # 10^2+20^2+5^2
    assert report.mae_cost == pytest.approx((0.2 + 0.3 + 0.0) / 3.0)
    assert report.per_day[1].personnel_abs_error == 20.0


def test_evaluate_thirty_five_day_series():
    truth = truth_series("CZU", [(400 + i, 1.0 + 0.01 * i) for i in range(35)])
    preds = predictions([(400.0 + i, (1.0 + 0.01 * i) * 1e6) for i in range(35)])
    report = evaluate_event("CZU", preds, truth)
    assert report.n_days == 35


def test_evaluate_names_missing_date():
    truth = truth_series("F", [(100, 1.0), (200, 2.0)])
    preds = predictions([(100.0, 1.0e6)])
    with pytest.raises(AlignmentError) as err:
        evaluate_event("F", preds, truth)
    assert "2020-08-18" in str(err.value)


def test_budget_converted_to_millions():
    truth = truth_series("F", [(100, 1.5)])
    preds = predictions([(100.0, 2_500_000.0)])
    report = evaluate_event("F", preds, truth)
    assert report.mae_cost == pytest.approx(1.0)


def test_emit_csv_rows_and_order():
    reports = [
        evaluate_event("ZETA", predictions([(1.0, 1e6)]), truth_series("ZETA", [(1, 1.0)])),
        evaluate_event("ALPHA", predictions([(2.0, 2e6)]), truth_series("ALPHA", [(2, 2.0)])),
    ]
    text = emit_report(reports, "csv")
    lines = text.strip().splitlines()
    assert lines[0] == "fire_id,target,mae,rmse"
    assert len(lines) == 5  # 2 fires x 2 targets + header
    assert lines[1].startswith("ALPHA,personnel") and lines[3].startswith("ZETA,personnel")


def test_emit_json_round_trips():
    report = evaluate_event("F", predictions([(10.0, 1e6), (12.0, 1.5e6)]),
                            truth_series("F", [(11, 1.1), (12, 1.4)]))
    text = emit_report([report], "json")
    restored = report_from_json(text)
    assert len(restored) == 1
    assert restored[0].n_days == 2
    assert restored[0].mae_personnel == pytest.approx(report.mae_personnel, abs=1e-4)
    assert emit_report(restored, "json") == text


def test_emit_requires_reports():
    with pytest.raises(PreconditionError):
        emit_report([], "csv")

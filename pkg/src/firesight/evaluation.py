"""Per-event scoring (MAE/RMSE) and machine-readable reports.

Predictions align to ground-truth dates; a truth day with no prediction is a
hard error because the pipeline's contract is one recommendation per event
day. Budgets cross the wire in integer USD and are converted to million USD
before scoring so both targets share the ground-truth scale.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
from dataclasses import dataclass

from .consolidation import canonical_json
from .errors import AlignmentError, PreconditionError
from .ingest import GroundTruthDay


def mae(pred: list[float], truth: list[float]) -> float:
    if len(pred) != len(truth) or not pred:
        raise PreconditionError("series must be equal-length and non-empty")
    return math.fsum(abs(p - t) for p, t in zip(pred, truth)) / len(pred)


def rmse(pred: list[float], truth: list[float]) -> float:
    if len(pred) != len(truth) or not pred:
        raise PreconditionError("series must be equal-length and non-empty")
    return math.sqrt(math.fsum((p - t) ** 2 for p, t in zip(pred, truth)) / len(pred))


@dataclass(frozen=True)
class DayScore:
    date: dt.date
    personnel_pred: float
    personnel_truth: float
    cost_pred: float     # million USD
    cost_truth: float

    @property
    def personnel_abs_error(self) -> float:
        return abs(self.personnel_pred - self.personnel_truth)

    @property
    def cost_abs_error(self) -> float:
        return abs(self.cost_pred - self.cost_truth)


@dataclass(frozen=True)
class EventReport:
    fire_id: str
    n_days: int
    mae_personnel: float
    rmse_personnel: float
    mae_cost: float
    rmse_cost: float
    per_day: tuple[DayScore, ...]


@dataclass(frozen=True)
class DayPrediction:
    date: dt.date
    personnel: float
    budget_usd: float


def evaluate_event(fire_id: str, predictions: list[DayPrediction],
                   truth: list[GroundTruthDay]) -> EventReport:
    if not truth:
        raise PreconditionError(f"no ground truth for {fire_id}")
    by_date = {p.date: p for p in predictions}
    days = []
    for t in truth:
        p = by_date.get(t.date)
        if p is None:
            raise AlignmentError(f"{fire_id}: no prediction for {t.date}")
        days.append(DayScore(
            date=t.date,
            personnel_pred=p.personnel,
            personnel_truth=float(t.personnel),
            cost_pred=p.budget_usd / 1e6,
            cost_truth=t.daily_cost,
        ))
    pp = [d.personnel_pred for d in days]
    pt = [d.personnel_truth for d in days]
    cp = [d.cost_pred for d in days]
    ct = [d.cost_truth for d in days]
    return EventReport(
        fire_id=fire_id,
        n_days=len(days),
        mae_personnel=mae(pp, pt),
        rmse_personnel=rmse(pp, pt),
        mae_cost=mae(cp, ct),
        rmse_cost=rmse(cp, ct),
        per_day=tuple(days),
    )


def emit_report(reports: list[EventReport], fmt: str = "csv") -> str:
    """Render reports as CSV rows (fire x target) or canonical JSON."""
    if not reports:
        raise PreconditionError("nothing to report")
    ordered = sorted(reports, key=lambda r: r.fire_id)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fire_id", "target", "mae", "rmse"])
        for r in ordered:
            w.writerow([r.fire_id, "personnel", f"{r.mae_personnel:.4f}", f"{r.rmse_personnel:.4f}"])
            w.writerow([r.fire_id, "cost", f"{r.mae_cost:.4f}", f"{r.rmse_cost:.4f}"])
        return buf.getvalue()
    if fmt == "json":
        return canonical_json([{
            "fire_id": r.fire_id,
            "n_days": r.n_days,
            "mae_personnel": r.mae_personnel,
            "rmse_personnel": r.rmse_personnel,
            "mae_cost": r.mae_cost,
            "rmse_cost": r.rmse_cost,
            "per_day": [{
                "date": d.date.isoformat(),
                "personnel_pred": d.personnel_pred,
                "personnel_truth": d.personnel_truth,
                "personnel_abs_error": d.personnel_abs_error,
                "cost_pred": d.cost_pred,
                "cost_truth": d.cost_truth,
                "cost_abs_error": d.cost_abs_error,
            } for d in r.per_day],
        } for r in ordered])
    raise PreconditionError(f"unknown report format {fmt!r}")


def report_from_json(text: str) -> list[EventReport]:
    docs = json.loads(text)
    out = []
    for doc in docs:
        days = tuple(DayScore(
            date=dt.date.fromisoformat(d["date"]),
            personnel_pred=d["personnel_pred"],
            personnel_truth=d["personnel_truth"],
            cost_pred=d["cost_pred"],
            cost_truth=d["cost_truth"],
        ) for d in doc["per_day"])
        out.append(EventReport(
            fire_id=doc["fire_id"],
            n_days=doc["n_days"],
            mae_personnel=doc["mae_personnel"],
            rmse_personnel=doc["rmse_personnel"],
            mae_cost=doc["mae_cost"],
            rmse_cost=doc["rmse_cost"],
            per_day=days,
        ))
    return out

"""Reference predictors: a physical fire-behavior chain and persistence.

The physical pathway runs total fire radiative power through fireline
intensity (with a radiative-fraction correction, since the satellite sees
only ~10% of total fire power), Byram's flame-length relation, the standard
four-class flame-length ladder (4/8/11 ft breaks), and a perimeter x class
workload score with a mild multi-cluster bump; per-target linear calibration
maps the score to personnel and cost. Persistence simply repeats yesterday's
ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .consolidation import EventDayContext
from .errors import DegenerateFitError, PreconditionError
from .ingest import GroundTruthDay

RADIATIVE_FRACTION_CORRECTION = 10.0
BYRAM_COEFF = 0.0775
BYRAM_EXP = 0.46
# 4/8/11 ft breaks at 0.3048 m/ft, pinned as decimal literals so the
# inclusive-upward boundary rule is exact
CLASS_BREAKS_M = (1.2192, 2.4384, 3.3528)
CLUSTER_ADJUST = 0.10


def fireline_intensity(total_frp_mw: float, perimeter_m: float,
                       kappa: float = RADIATIVE_FRACTION_CORRECTION) -> float:
    """kW per meter of fire front."""
    if perimeter_m <= 0:
        raise PreconditionError("perimeter must be positive")
    return total_frp_mw * 1000.0 * kappa / perimeter_m


def flame_length(intensity_kw_m: float) -> float:
    """Byram's relation, meters."""
    if intensity_kw_m < 0:
        raise PreconditionError("negative fireline intensity")
    return BYRAM_COEFF * intensity_kw_m ** BYRAM_EXP


def nwcg_class(flame_length_m: float) -> int:
    if flame_length_m < 0:
        raise PreconditionError("negative flame length")
    for cls, brk in enumerate(CLASS_BREAKS_M, start=1):
        if flame_length_m < brk:
            return cls
    return 4


def workload_score(perimeter_m: float, cls: int, n_clusters: int) -> float:
    if perimeter_m < 0 or n_clusters < 0:
        raise PreconditionError("negative workload inputs")
    if n_clusters == 0:
        return 0.0
    return (perimeter_m / 1000.0) * cls * (1.0 + CLUSTER_ADJUST * (n_clusters - 1))


def day_workload_score(context: EventDayContext,
                       kappa: float = RADIATIVE_FRACTION_CORRECTION) -> float:
    """Workload score for one event day, from its consolidated features."""
    n = context.snapshot.n_clusters
    if n == 0:
        return 0.0
    perimeter = math.fsum(sorted(c.perimeter_m for c in context.clusters))
    intensity = fireline_intensity(context.snapshot.total_frp, perimeter, kappa)
    cls = nwcg_class(flame_length(intensity))
    return workload_score(perimeter, cls, n)


def calibrate_linear(scores: list[float], targets: list[float]) -> tuple[float, float]:
    """Ordinary least squares (slope, intercept)."""
    if len(scores) != len(targets) or len(scores) < 2:
        raise PreconditionError("need equal-length series of at least 2 points")
    n = len(scores)
    mean_s = math.fsum(scores) / n
    mean_t = math.fsum(targets) / n
    var = math.fsum((s - mean_s) ** 2 for s in scores)
    if var == 0.0:
        raise DegenerateFitError("scores are constant; cannot calibrate")
    cov = math.fsum((s - mean_s) * (t - mean_t) for s, t in zip(scores, targets))
    slope = cov / var
    return slope, mean_t - slope * mean_s


@dataclass(frozen=True)
class PhysicalModel:
    calib_personnel: tuple[float, float]  # (slope, intercept)
    calib_cost: tuple[float, float]

    def save(self, path: Path) -> None:
        path.write_text(json.dumps({
            "calib_personnel": list(self.calib_personnel),
            "calib_cost": list(self.calib_cost),
        }, sort_keys=True, indent=1) + "\n")

    @classmethod
    def load(cls, path: Path) -> "PhysicalModel":
        doc = json.loads(path.read_text())
        return cls(calib_personnel=tuple(doc["calib_personnel"]),
                   calib_cost=tuple(doc["calib_cost"]))


def fit_physical(contexts: list[EventDayContext],
                 truth: list[GroundTruthDay]) -> PhysicalModel:
    """Calibrate both targets on matched (context, ground truth) days."""
    truth_map = {(t.fire_id, t.date): t for t in truth}
    scores, personnel, costs = [], [], []
    for ctx in contexts:
        t = truth_map.get((ctx.fire_id, ctx.date))
        if t is None:
            continue
        scores.append(day_workload_score(ctx))
        personnel.append(float(t.personnel))
        costs.append(t.daily_cost)
    return PhysicalModel(
        calib_personnel=calibrate_linear(scores, personnel),
        calib_cost=calibrate_linear(scores, costs),
    )


def physical_predict(model: PhysicalModel, score: float) -> tuple[float, float]:
    """(personnel, cost in million USD), clamped at zero."""
    sp, ip = model.calib_personnel
    sc, ic = model.calib_cost
    return max(0.0, sp * score + ip), max(0.0, sc * score + ic)


def persistence_predict(history: list[GroundTruthDay]) -> tuple[float, float]:
    """Yesterday's observed (personnel, cost)."""
    if not history:
        raise PreconditionError("persistence needs at least one prior day")
    last = history[-1]
    return float(last.personnel), last.daily_cost

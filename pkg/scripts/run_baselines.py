#!/usr/bin/env python3
"""Fit the physical baseline on the historical corpus and score both
reference predictors (physical, persistence) on one or more fires.

Usage (after corpus-build):
  python scripts/run_baselines.py --config data/synthetic/config.toml \
      --fires DELTA,ECHO --out-dir runs/baselines

Writes fitted coefficients plus a CSV/JSON report per baseline. Persistence
predicts day t from day t-1's ground truth, so its first event day is scored
against itself (no prior exists).
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from firesight.analogs import _context_files
from firesight.baselines import (
    day_workload_score,
    fit_physical,
    persistence_predict,
    physical_predict,
)
from firesight.config import load_config
from firesight.consolidation import context_from_dict
from firesight.evaluation import DayPrediction, emit_report, evaluate_event
from firesight.pipeline import (
    build_day_context,
    load_fire_hotspots,
    load_layers,
    load_truth,
    load_weather_grids,
)


def fire_contexts(cfg, fire_id, layers, dates):
    hotspots = load_fire_hotspots(cfg, fire_id)
    out = []
    for date in dates:
        weather = load_weather_grids(cfg, date)
        out.append(build_day_context(cfg, fire_id, date, hotspots.get(date, []),
                                     layers, weather))
    return out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--config", required=True)
    parser.add_argument("--fires", required=True, help="comma-separated fire ids to score")
    parser.add_argument("--out-dir", required=True, type=Path)
    args = parser.parse_args()

    cfg = load_config(args.config)
    layers = load_layers(cfg)
    truth = load_truth(cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    corpus_contexts = [context_from_dict(json.loads(p.read_text()))
                       for p in _context_files(cfg.resolve(cfg.paths.corpus_dir))]
    corpus_truth = [t for fid in cfg.corpus_fires for t in truth[fid]]
    model = fit_physical(corpus_contexts, corpus_truth)
    model.save(args.out_dir / "physical_model.json")
    print(f"physical calibration: personnel {model.calib_personnel}, "
          f"cost {model.calib_cost}")

    physical_reports, persistence_reports = [], []
    for fire_id in args.fires.split(","):
        fire_id = fire_id.strip()
        series = truth[fire_id]
        dates = [t.date for t in series]
        contexts = fire_contexts(cfg, fire_id, layers, dates)

        phys = []
        for ctx in contexts:
            p, c = physical_predict(model, day_workload_score(ctx))
            phys.append(DayPrediction(ctx.date, p, c * 1e6))
        physical_reports.append(evaluate_event(fire_id, phys, series))

        pers = []
        for i, t in enumerate(series):
            p, c = persistence_predict(series[:i]) if i else (float(t.personnel), t.daily_cost)
            pers.append(DayPrediction(t.date, p, c * 1e6))
        persistence_reports.append(evaluate_event(fire_id, pers, series))

    for name, reports in (("physical", physical_reports),
                          ("persistence", persistence_reports)):
        (args.out_dir / f"{name}_report.csv").write_text(emit_report(reports, "csv"))
        (args.out_dir / f"{name}_report.json").write_text(emit_report(reports, "json"))
        print(f"\n{name}:")
        print(emit_report(reports, "csv"), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

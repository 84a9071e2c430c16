"""Command-line interface.

Subcommands: footprint, perceive, corpus-build, run, evaluate.
Exit status: 0 success, 1 runtime failure, 2 input/validation failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import sys
import time
from pathlib import Path

from . import pipeline
from .config import RunConfig, load_config
from .consolidation import canonical_json, context_to_dict
from .errors import FiresightError, InputError
from .evaluation import emit_report, evaluate_event
from .footprint import geometry_to_geojson, normalize_event_day


def _default_out_dir(cfg: RunConfig, label: str) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    return cfg.base_dir / "runs" / f"{label}-{stamp}-{cfg.digest()}"


def cmd_footprint(cfg: RunConfig, args) -> int:
    date = dt.date.fromisoformat(args.date)
    hotspots = pipeline.load_fire_hotspots(cfg, args.fire_id).get(date, [])
    day = normalize_event_day(date, hotspots, eps_m=cfg.params.eps_m,
                              min_pts=cfg.params.min_pts)
    out_dir = Path(args.out_dir) if args.out_dir else _default_out_dir(cfg, f"footprint-{args.fire_id}")
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"footprint_{args.fire_id}_{date.isoformat()}.geojson"
    out.write_text(geometry_to_geojson(day))
    print(f"{args.fire_id} {date}: {len(day.clusters)} clusters, "
          f"{len(day.noise_points)} noise points -> {out}")
    return 0


def cmd_perceive(cfg: RunConfig, args) -> int:
    date = dt.date.fromisoformat(args.date)
    script, context = pipeline.perceive_day(cfg, args.fire_id, date)
    if args.json:
        print(canonical_json(context_to_dict(context)), end="")
    else:
        print(script.text, end="")
    return 0


def cmd_corpus_build(cfg: RunConfig, args) -> int:
    corpus_dir = pipeline.build_corpus(cfg)
    n = len(list((corpus_dir / "contexts").glob("*.json")))
    print(f"corpus built: {n} context files under {corpus_dir}")
    return 0


def cmd_run(cfg: RunConfig, args) -> int:
    client = pipeline.make_client(cfg)
    fire_ids = args.fire_id.split(",")
    for fire_id in fire_ids:
        fire_id = fire_id.strip()
        out_dir = (Path(args.out_dir) / fire_id if args.out_dir
                   else _default_out_dir(cfg, f"run-{fire_id}"))
        summary = pipeline.run_event(cfg, fire_id, client, out_dir)
        line = (f"{fire_id}: {summary.n_days} days, {summary.fallbacks} fallbacks "
                f"-> {summary.out_dir}")
        if summary.report is not None:
            line += (f" | personnel MAE {summary.report.mae_personnel:.4f}"
                     f" RMSE {summary.report.rmse_personnel:.4f}"
                     f" | cost MAE {summary.report.mae_cost:.4f}"
                     f" RMSE {summary.report.rmse_cost:.4f}")
        print(line)
    return 0


def cmd_evaluate(cfg: RunConfig, args) -> int:
    predictions_path = Path(args.predictions)
    if not predictions_path.exists():
        raise InputError(f"predictions file not found: {predictions_path}")
    by_fire = pipeline.read_predictions(predictions_path)
    truth = pipeline.load_truth(cfg)
    reports = []
    for fire_id in sorted(by_fire):
        if fire_id not in truth:
            raise InputError(f"no ground truth for predicted fire {fire_id}")
        reports.append(evaluate_event(fire_id, by_fire[fire_id], truth[fire_id]))
    csv_text = emit_report(reports, "csv")
    print(csv_text, end="")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / pipeline.REPORT_CSV).write_text(csv_text)
        (out_dir / pipeline.REPORT_JSON).write_text(emit_report(reports, "json"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="firesight",
        description="Wildfire situational awareness and daily resource recommendations.")
    parser.add_argument("--config", required=True, help="path to the run config file")
    parser.add_argument("--out-dir", default="", help="output directory (default: runs/<auto>)")
    parser.add_argument("--client", default="", choices=["", "mock", "replay", "live"],
                        help="override the configured completion client")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("footprint", help="cluster one day's hotspots into footprints")
    p.add_argument("--fire-id", required=True)
    p.add_argument("--date", required=True, help="YYYY-MM-DD")
    p.set_defaults(func=cmd_footprint)

    p = sub.add_parser("perceive", help="print the perception script for one day")
    p.add_argument("--fire-id", required=True)
    p.add_argument("--date", required=True, help="YYYY-MM-DD")
    p.add_argument("--json", action="store_true", help="dump the day context as JSON")
    p.set_defaults(func=cmd_perceive)

    p = sub.add_parser("corpus-build", help="build the historical corpus")
    p.set_defaults(func=cmd_corpus_build)

    p = sub.add_parser("run", help="produce daily recommendations for a fire")
    p.add_argument("--fire-id", required=True,
                   help="fire id, or comma-separated list of fire ids")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="score a predictions file against ground truth")
    p.add_argument("--predictions", required=True, help="recommendations JSONL path")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.client:
            cfg.client.kind = args.client
        return args.func(cfg, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FiresightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Historical-analog retrieval scaffold.

Each event day becomes a fixed-layout vector: ten z-scored numeric features
(fire activity, exposure, terrain, weather) plus two 0/1 flags. Weighted
cosine similarity against the historical corpus returns the top-k prior
days, de-duplicated to at most one day per fire; the surviving personnel and
cost values supply soft bounds for the output validator.

The corpus lives on disk as one canonical-JSON context per (fire, day) plus
a ground-truth CSV; per-feature stats are cached in a sidecar keyed by a
fingerprint of the context files, so they are rebuilt whenever the corpus
changes.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .consolidation import EventDayContext, canonical_json, context_from_dict, event_weather
from .errors import FormatError, PreconditionError
from .ingest import parse_ground_truth

NUMERIC_FEATURES = (
    "total_points", "total_frp", "total_area", "n_clusters",
    "total_population", "mean_spread", "bi", "tmax", "wind", "fm1",
)
FLAG_FEATURES = ("no_hotspot_day", "multi_county")

DEFAULT_ANALOG_K = 5
DEFAULT_BOUND_SLACK = (0.25, 4.0)


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]   # z-scored numeric features
    flags: tuple[int, ...]      # 0/1 categorical flags

    def __post_init__(self):
        if len(self.values) != len(NUMERIC_FEATURES) or len(self.flags) != len(FLAG_FEATURES):
            raise ValueError("feature vector has wrong dimensionality")
        if any(f not in (0, 1) for f in self.flags):
            raise ValueError("flags must be 0 or 1")

    @property
    def full(self) -> tuple[float, ...]:
        return self.values + tuple(float(f) for f in self.flags)


@dataclass(frozen=True)
class AnalogRecord:
    fire_id: str
    date: dt.date
    similarity: float
    personnel: float
    daily_cost: float  # million USD

    def __post_init__(self):
        if not (-1.0 - 1e-9 <= self.similarity <= 1.0 + 1e-9):
            raise ValueError(f"similarity out of range: {self.similarity}")


@dataclass(frozen=True)
class CorpusStats:
    means: tuple[float, ...]
    stds: tuple[float, ...]          # population standard deviation
    constant: tuple[bool, ...]

    def __post_init__(self):
        if not (len(self.means) == len(self.stds) == len(self.constant) == len(NUMERIC_FEATURES)):
            raise ValueError("stats dimensionality mismatch")
        if any(s < 0 for s in self.stds):
            raise ValueError("negative standard deviation")


@dataclass(frozen=True)
class AnalogBounds:
    """[min*slack_lo, max*slack_hi] ranges; None means unbounded."""

    personnel: tuple[float, float] | None
    cost_musd: tuple[float, float] | None


RawRow = list  # list[float | None], one entry per NUMERIC_FEATURE


def corpus_stats(rows: list[RawRow]) -> CorpusStats:
    """Per-dimension mean and population std over raw feature rows.

    None entries (unavailable signals) are skipped; a dimension with zero
    variance or no data is flagged constant.
    """
    if not rows:
        raise PreconditionError("empty corpus")
    means, stds, constant = [], [], []
    for d in range(len(NUMERIC_FEATURES)):
        col = [row[d] for row in rows if row[d] is not None]
        if not col:
            means.append(0.0)
            stds.append(0.0)
            constant.append(True)
            continue
        mean = math.fsum(col) / len(col)
        var = math.fsum((v - mean) ** 2 for v in col) / len(col)
        std = math.sqrt(var)
        means.append(mean)
        stds.append(std)
        constant.append(std == 0.0)
    return CorpusStats(means=tuple(means), stds=tuple(stds), constant=tuple(constant))


def raw_features(context: EventDayContext) -> RawRow:
    """Pre-standardization feature row for an active day."""
    snap = context.snapshot
    spreads = [c.terrain.spread_potential for c in context.clusters
               if c.terrain.spread_potential is not None]
    weather = event_weather(list(context.clusters))
    return [
        float(snap.total_points),
        snap.total_frp,
        snap.total_area_acres,
        float(snap.n_clusters),
        snap.total_population,
        math.fsum(sorted(spreads)) / len(spreads) if spreads else None,
        weather.bi,
        weather.tmax,
        weather.wind,
        weather.fm1,
    ]


def _zscore(row: RawRow, stats: CorpusStats) -> tuple[float, ...]:
    out = []
    for v, mean, std, const in zip(row, stats.means, stats.stds, stats.constant):
        if v is None or const or std == 0.0:
            out.append(0.0)
        else:
            out.append((v - mean) / std)
    return tuple(out)


def _flags(no_hotspot: bool, multi_county: bool) -> tuple[int, int]:
    return (1 if no_hotspot else 0, 1 if multi_county else 0)


def vectorize_day(context: EventDayContext, stats: CorpusStats) -> FeatureVector:
    if not context.clusters:
        raise PreconditionError("active-day vectorization needs >= 1 cluster")
    return FeatureVector(
        values=_zscore(raw_features(context), stats),
        flags=_flags(False, len(context.snapshot.counties) > 1),
    )


def quiet_day_raw(history: list[EventDayContext]) -> RawRow:
    """Raw trajectory row for a no-hotspot day: averaged 3/7-day rolling means.

    Every feature takes (mean(last 3) + mean(last 7)) / 2 over the days where
    it was defined; features never observed in the window stay None (and end
    up at the corpus mean after z-scoring).
    """
    if not history:
        raise PreconditionError("quiet-day vectorization needs history")
    recent = history[-7:]
    rows = [raw_features(ctx) for ctx in recent]
    out: RawRow = []
    for d in range(len(NUMERIC_FEATURES)):
        col = [row[d] for row in rows if row[d] is not None]
        if not col:
            out.append(None)
            continue
        m3 = math.fsum(col[-3:]) / len(col[-3:])
        m7 = math.fsum(col) / len(col)
        out.append((m3 + m7) / 2.0)
    return out


def vectorize_quiet_day(history: list[EventDayContext], stats: CorpusStats) -> FeatureVector:
    return FeatureVector(
        values=_zscore(quiet_day_raw(history), stats),
        flags=_flags(True, False),
    )


def zero_activity_vector(stats: CorpusStats) -> FeatureVector:
    """Vector for a quiet day with no usable history: zero activity, rest unknown."""
    row: RawRow = [0.0, 0.0, 0.0, 0.0] + [None] * (len(NUMERIC_FEATURES) - 4)
    return FeatureVector(values=_zscore(row, stats), flags=_flags(True, False))


def weighted_cosine(a: FeatureVector, b: FeatureVector,
                    weights: tuple[float, ...] | None = None) -> float:
    av, bv = a.full, b.full
    if weights is None:
        weights = (1.0,) * len(av)
    if len(weights) != len(av):
        raise PreconditionError(f"weight vector has {len(weights)} entries, expected {len(av)}")
    if any(w < 0 for w in weights) or all(w == 0 for w in weights):
        raise PreconditionError("weights must be non-negative and not all zero")
    num = math.fsum(w * x * y for w, x, y in zip(weights, av, bv))
    na = math.sqrt(math.fsum(w * x * x for w, x in zip(weights, av)))
    nb = math.sqrt(math.fsum(w * y * y for w, y in zip(weights, bv)))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return num / (na * nb)


@dataclass(frozen=True)
class CorpusEntry:
    fire_id: str
    date: dt.date
    vector: FeatureVector
    personnel: float
    daily_cost: float  # million USD


def retrieve_analogs(query: FeatureVector, corpus: list[CorpusEntry],
                     k: int = DEFAULT_ANALOG_K,
                     weights: tuple[float, ...] | None = None) -> list[AnalogRecord]:
    """Top-k prior days by weighted cosine, at most one per fire.

    Ranking ties break on earlier date, then fire id; the best-ranked day of
    each fire survives de-duplication.
    """
    if not corpus:
        raise PreconditionError("empty analog corpus")
    ranked = sorted(
        ((weighted_cosine(query, e.vector, weights), e) for e in corpus),
        key=lambda t: (-t[0], t[1].date, t[1].fire_id),
    )
    out: list[AnalogRecord] = []
    seen: set[str] = set()
    for sim, e in ranked:
        if e.fire_id in seen:
            continue
        seen.add(e.fire_id)
        out.append(AnalogRecord(fire_id=e.fire_id, date=e.date,
                                similarity=max(-1.0, min(1.0, sim)),
                                personnel=e.personnel, daily_cost=e.daily_cost))
        if len(out) == k:
            break
    return out


def analog_bounds(analogs: list[AnalogRecord],
                  slack: tuple[float, float] = DEFAULT_BOUND_SLACK) -> AnalogBounds:
    if not analogs:
        return AnalogBounds(personnel=None, cost_musd=None)
    lo, hi = slack
    personnel = [a.personnel for a in analogs]
    costs = [a.daily_cost for a in analogs]
    return AnalogBounds(
        personnel=(min(personnel) * lo, max(personnel) * hi),
        cost_musd=(min(costs) * lo, max(costs) * hi),
    )


# ---------------------------------------------------------------------------
# corpus directory layout


@dataclass(frozen=True)
class Corpus:
    entries: tuple[CorpusEntry, ...]
    stats: CorpusStats


def _context_files(corpus_dir: Path) -> list[Path]:
    return sorted((corpus_dir / "contexts").glob("*.json"))


def corpus_fingerprint(corpus_dir: Path) -> str:
    h = hashlib.sha256()
    for path in _context_files(corpus_dir):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def write_context(corpus_dir: Path, context: EventDayContext) -> Path:
    from .consolidation import context_to_dict

    out = corpus_dir / "contexts"
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{context.fire_id}_{context.date.isoformat()}.json"
    path.write_text(canonical_json(context_to_dict(context)))
    return path


def corpus_raw_rows(contexts_by_fire: dict[str, list[EventDayContext]]) -> list[RawRow]:
    """Raw rows for every corpus day, chronological per fire.

    No-hotspot days take the quiet-day trajectory over that fire's prior
    days; a quiet first day (no history) contributes an all-zero activity row.
    """
    rows: list[RawRow] = []
    for fire_id in sorted(contexts_by_fire):
        contexts = sorted(contexts_by_fire[fire_id], key=lambda c: c.date)
        for i, ctx in enumerate(contexts):
            if ctx.clusters:
                rows.append(raw_features(ctx))
            elif i > 0:
                rows.append(quiet_day_raw(contexts[:i]))
            else:
                rows.append([0.0, 0.0, 0.0, 0.0] + [None] * (len(NUMERIC_FEATURES) - 4))
    return rows


def build_corpus_index(contexts_by_fire: dict[str, list[EventDayContext]],
                       truth_by_fire: dict[str, list],
                       stats: CorpusStats) -> list[CorpusEntry]:
    truth_map = {(d.fire_id, d.date): d for days in truth_by_fire.values() for d in days}
    entries: list[CorpusEntry] = []
    for fire_id in sorted(contexts_by_fire):
        contexts = sorted(contexts_by_fire[fire_id], key=lambda c: c.date)
        for i, ctx in enumerate(contexts):
            truth = truth_map.get((fire_id, ctx.date))
            if truth is None:
                continue  # no targets to offer as a prior
            if ctx.clusters:
                vec = vectorize_day(ctx, stats)
            elif i > 0:
                vec = vectorize_quiet_day(contexts[:i], stats)
            else:
                row: RawRow = [0.0, 0.0, 0.0, 0.0] + [None] * (len(NUMERIC_FEATURES) - 4)
                vec = FeatureVector(values=_zscore(row, stats), flags=_flags(True, False))
            entries.append(CorpusEntry(fire_id=fire_id, date=ctx.date, vector=vec,
                                       personnel=float(truth.personnel),
                                       daily_cost=truth.daily_cost))
    return entries


def save_stats(corpus_dir: Path, stats: CorpusStats) -> None:
    doc = {
        "fingerprint": corpus_fingerprint(corpus_dir),
        "features": list(NUMERIC_FEATURES),
        "means": list(stats.means),
        "stds": list(stats.stds),
        "constant": list(stats.constant),
    }
    (corpus_dir / "stats.json").write_text(canonical_json(doc))


def _read_stats(stats_path: Path) -> CorpusStats:
    doc = json.loads(stats_path.read_text())
    return CorpusStats(means=tuple(doc["means"]), stds=tuple(doc["stds"]),
                       constant=tuple(doc["constant"]))


def load_corpus(corpus_dir: Path) -> Corpus:
    """Load contexts + ground truth; recompute the stats sidecar when stale.

    Stats are always taken from the sidecar after (re)writing it, so every
    load sees the same canonical-precision values regardless of who computed
    them.
    """
    corpus_dir = Path(corpus_dir)
    files = _context_files(corpus_dir)
    if not files:
        raise FormatError(f"no corpus contexts under {corpus_dir}")
    by_fire: dict[str, list[EventDayContext]] = {}
    for path in files:
        ctx = context_from_dict(json.loads(path.read_text()))
        by_fire.setdefault(ctx.fire_id, []).append(ctx)

    stats_path = corpus_dir / "stats.json"
    fresh = (stats_path.exists()
             and json.loads(stats_path.read_text()).get("fingerprint")
             == corpus_fingerprint(corpus_dir))
    if not fresh:
        save_stats(corpus_dir, corpus_stats(corpus_raw_rows(by_fire)))
    stats = _read_stats(stats_path)

    truth_path = corpus_dir / "ground_truth.csv"
    if not truth_path.exists():
        raise FormatError(f"corpus ground truth missing: {truth_path}")
    with open(truth_path) as fh:
        truth = parse_ground_truth(fh)
    entries = build_corpus_index(by_fire, truth, stats)
    return Corpus(entries=tuple(entries), stats=stats)

"""Prompt assembly, strict output validation, and the re-prompt loop.

The agent speaks a fixed wire format: a single JSON object with exact keys,
exact unit strings ("people", "USD"), integer resource values, a 1-5
confidence score, and six five-level indicator enums. The validator walks
the document in a fixed order (structure, units, types/enums, ranges) and
reports the first violation; after ``max_attempts`` failed completions the
loop falls back to the analog-median recommendation and flags it.

Two prompt modes share the interface: Day-1 builds from the perception
script plus the analog block; Incremental prepends the previous-analysis and
cumulative-context blocks and renders the script in its "vs Yesterday" form.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field

from .analogs import (
    AnalogBounds,
    AnalogRecord,
    Corpus,
    DEFAULT_ANALOG_K,
    DEFAULT_BOUND_SLACK,
    FeatureVector,
    analog_bounds,
    retrieve_analogs,
    vectorize_day,
    vectorize_quiet_day,
    zero_activity_vector,
)
from .clients import CompletionClient
from .consolidation import (
    DOWN,
    EventDayContext,
    FLAT,
    GlobalSnapshot,
    TemporalAnchors,
    UP,
)
from .errors import FallbackUnavailableError, PreconditionError
from .perception import DEFAULT_TOP_K, PerceptionScript, render_script

INDICATOR_KEYS = (
    "spread_containment_difficulty",
    "resource_access_deployment",
    "weather_escalation_risk",
    "terrain_operational_complexity",
    "population_exposure_density",
    "fire_station_coverage",
)
RATIONALE_KEYS = (
    "situation_comparison",
    "personnel_reasoning",
    "budget_reasoning",
    "overall_reasoning",
)
INDICATOR_LEVELS = ("minimal", "low", "moderate", "high", "critical")

DEFAULT_MAX_ATTEMPTS = 3

SYSTEM_PROMPT = """You are a wildfire analysis and resource management expert. You must return ONLY a valid JSON object following the exact schema provided below.

### Global Guidelines
- The task is to estimate TODAY's required daily_personnel and daily_budget.
- reasoning must explain how terrain, weather, fire intensity, population exposure, and resource accessibility shape your judgment, considering both current conditions and previous analysis context.
- daily_personnel is the total integer headcount assigned today (all crews/engines/aviation modules plus command/overhead/support).
- daily_budget is the **new cost incurred today only**, in USD.

### Resource Estimation Principles
- If the fire surges, remember resources are finite-do not assume cost and personnel can scale proportionally.
- When the fire eases, non-suppression needs persist (patrol, mop-up, rehab, logistics); budget and staffing may still be required.
- In "stable" periods, account for cumulative costs and crew fatigue-budgets and crews are not unlimited.
- No detected hotspots != full extinguishment; avoid indiscriminate cuts and maintain a prudent baseline.
- Weigh these trade-offs and produce a balanced, defensible recommendation for today's personnel and today's spend. Include any key assumptions and risks.
- **Common pitfall**: after you've committed resources and the fire is "under control" but not yet stable, that actually signals under-resourcing-maintain or increase resources until true stability is confirmed.

### Analysis Approach
- Analyze the fire situation holistically, considering today's conditions and changes from the previous analysis.
- Provide updated estimates for required daily_personnel and daily_budget based on your professional judgment.

### Output Schema (STRICT JSON; no extra keys; no comments)
{
  "analysis_reasoning": {
    "situation_comparison": "<2-3 sentences comparing today vs yesterday>",
    "personnel_reasoning": "<2-3 sentences explaining daily_personnel changes>",
    "budget_reasoning": "<2-3 sentences explaining daily_budget changes>",
    "overall_reasoning": "<2-3 sentences with overall change assessment>"
  },
  "resource_requirements": {
    "daily_personnel": {
      "value": "<integer>",
      "unit": "people"
    },
    "daily_budget": {
      "value": "<integer>",
      "unit": "USD"
    }
  },
  "confidence": {
    "score": "<1-5 integer>"
  },
  "intermediate_indicators": {
    "spread_containment_difficulty": "<minimal|low|moderate|high|critical>",
    "resource_access_deployment": "<minimal|low|moderate|high|critical>",
    "weather_escalation_risk": "<minimal|low|moderate|high|critical>",
    "terrain_operational_complexity": "<minimal|low|moderate|high|critical>",
    "population_exposure_density": "<minimal|low|moderate|high|critical>",
    "fire_station_coverage": "<minimal|low|moderate|high|critical>"
  }
}"""


@dataclass(frozen=True)
class PromptPair:
    system_text: str
    user_text: str


@dataclass(frozen=True)
class Recommendation:
    personnel: int
    daily_budget_usd: int
    confidence: int
    indicators: dict[str, str]
    rationales: dict[str, str]

    def __post_init__(self):
        if self.personnel < 0 or self.daily_budget_usd < 0:
            raise ValueError("negative resource value")
        if not (1 <= self.confidence <= 5):
            raise ValueError(f"confidence out of range: {self.confidence}")

    def to_wire(self) -> dict:
        return {
            "analysis_reasoning": {k: self.rationales[k] for k in RATIONALE_KEYS},
            "resource_requirements": {
                "daily_personnel": {"value": self.personnel, "unit": "people"},
                "daily_budget": {"value": self.daily_budget_usd, "unit": "USD"},
            },
            "confidence": {"score": self.confidence},
            "intermediate_indicators": {k: self.indicators[k] for k in INDICATOR_KEYS},
        }


@dataclass(frozen=True)
class ValidationFailure:
    category: str  # not_json | schema_violation | unit_violation | range_violation
    path: str
    message: str


@dataclass(frozen=True)
class CumulativeTotals:
    days_since_start: int
    cost_musd: float
    personnel_days: float


# ---------------------------------------------------------------------------
# validation


def _check_keys(obj, expected: tuple[str, ...], path: str) -> ValidationFailure | None:
    if not isinstance(obj, dict):
        return ValidationFailure("schema_violation", path, "expected a JSON object")
    for key in expected:
        if key not in obj:
            return ValidationFailure("schema_violation", f"{path}.{key}", "missing key")
    extras = sorted(set(obj) - set(expected))
    if extras:
        return ValidationFailure("schema_violation", f"{path}.{extras[0]}", "extra key")
    return None


def _require_int(doc_val, path: str, lo: int | None = None,
                 hi: int | None = None) -> ValidationFailure | None:
    if isinstance(doc_val, bool) or not isinstance(doc_val, int):
        return ValidationFailure("schema_violation", path, "expected an integer")
    if lo is not None and doc_val < lo:
        return ValidationFailure("schema_violation", path, f"must be >= {lo}")
    if hi is not None and doc_val > hi:
        return ValidationFailure("schema_violation", path, f"must be <= {hi}")
    return None


def validate_output(raw: str, bounds: AnalogBounds) -> Recommendation | ValidationFailure:
    """Parse and validate one completion; first violation wins."""
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, TypeError) as exc:
        return ValidationFailure("not_json", "$", str(exc))
    if not isinstance(doc, dict):
        return ValidationFailure("schema_violation", "$", "top level is not a JSON object")

    # structure
    fail = _check_keys(doc, ("analysis_reasoning", "resource_requirements",
                             "confidence", "intermediate_indicators"), "$")
    if fail:
        return fail
    fail = _check_keys(doc["analysis_reasoning"], RATIONALE_KEYS, "$.analysis_reasoning")
    if fail:
        return fail
    fail = _check_keys(doc["resource_requirements"], ("daily_personnel", "daily_budget"),
                       "$.resource_requirements")
    if fail:
        return fail
    for res in ("daily_personnel", "daily_budget"):
        fail = _check_keys(doc["resource_requirements"][res], ("value", "unit"),
                           f"$.resource_requirements.{res}")
        if fail:
            return fail
    fail = _check_keys(doc["confidence"], ("score",), "$.confidence")
    if fail:
        return fail
    fail = _check_keys(doc["intermediate_indicators"], INDICATOR_KEYS,
                       "$.intermediate_indicators")
    if fail:
        return fail

    # units
    for res, unit in (("daily_personnel", "people"), ("daily_budget", "USD")):
        got = doc["resource_requirements"][res]["unit"]
        if got != unit:
            return ValidationFailure("unit_violation",
                                     f"$.resource_requirements.{res}.unit",
                                     f"expected {unit!r}, got {got!r}")

    # types and enums
    for key in RATIONALE_KEYS:
        v = doc["analysis_reasoning"][key]
        if not isinstance(v, str) or not v.strip():
            return ValidationFailure("schema_violation", f"$.analysis_reasoning.{key}",
                                     "expected non-empty text")
    for res in ("daily_personnel", "daily_budget"):
        fail = _require_int(doc["resource_requirements"][res]["value"],
                            f"$.resource_requirements.{res}.value", lo=0)
        if fail:
            return fail
    fail = _require_int(doc["confidence"]["score"], "$.confidence.score", lo=1, hi=5)
    if fail:
        return fail
    for key in INDICATOR_KEYS:
        v = doc["intermediate_indicators"][key]
        if v not in INDICATOR_LEVELS:
            return ValidationFailure("schema_violation", f"$.intermediate_indicators.{key}",
                                     f"not one of {'|'.join(INDICATOR_LEVELS)}")

    # analog-anchored ranges
    personnel = doc["resource_requirements"]["daily_personnel"]["value"]
    budget = doc["resource_requirements"]["daily_budget"]["value"]
    if bounds.personnel is not None:
        lo, hi = bounds.personnel
        if not (lo <= personnel <= hi):
            return ValidationFailure("range_violation",
                                     "$.resource_requirements.daily_personnel.value",
                                     f"{personnel} outside [{lo:.2f}, {hi:.2f}]")
    if bounds.cost_musd is not None:
        lo, hi = bounds.cost_musd
        if not (lo <= budget / 1e6 <= hi):
            return ValidationFailure("range_violation",
                                     "$.resource_requirements.daily_budget.value",
                                     f"{budget / 1e6:.4f} MUSD outside [{lo:.4f}, {hi:.4f}]")

    return Recommendation(
        personnel=personnel,
        daily_budget_usd=budget,
        confidence=doc["confidence"]["score"],
        indicators={k: doc["intermediate_indicators"][k] for k in INDICATOR_KEYS},
        rationales={k: doc["analysis_reasoning"][k] for k in RATIONALE_KEYS},
    )


# ---------------------------------------------------------------------------
# prompt assembly


def format_rag_block(analogs: list[AnalogRecord]) -> str:
    lines = ["## Historical Context (RAG)"]
    if not analogs:
        lines.append("- no analogs available")
    for a in analogs:
        lines.append(f"- [{a.fire_id} {a.date.isoformat()}] sim={a.similarity:.3f} | "
                     f"Personnel={a.personnel:.1f}, Daily_Budget=${a.daily_cost * 1e6:.2f}")
    return "\n".join(lines)


def _splice_rag(script_text: str, rag_block: str) -> str:
    marker = "## Cluster Details"
    if marker in script_text:
        return script_text.replace(marker, f"{rag_block}\n\n{marker}", 1)
    return script_text.rstrip("\n") + "\n\n" + rag_block + "\n"


def build_day1_prompt(script: PerceptionScript, analogs: list[AnalogRecord]) -> PromptPair:
    return PromptPair(system_text=SYSTEM_PROMPT,
                      user_text=_splice_rag(script.text, format_rag_block(analogs)))


_TREND_WORDS = {UP: "increasing", DOWN: "decreasing", FLAT: "stable"}


def _previous_block(prev: Recommendation, cumulative: CumulativeTotals) -> str:
    reasoning = prev.rationales.get("overall_reasoning") or "NA"
    return "\n".join([
        "## Previous Analysis Context",
        f"- Previous personnel: {prev.personnel} people",
        f"- Previous daily budget: {prev.daily_budget_usd}",
        f"- Total cumulative cost: ${int(round(cumulative.cost_musd * 1e6))}",
        f"- Previous reasoning: {reasoning}",
    ])


def _cumulative_block(anchors: TemporalAnchors, cumulative: CumulativeTotals) -> str:
    cost = anchors.rolling.get("cost")
    personnel = anchors.rolling.get("personnel")

    def usd(v):
        return f"${int(round(v * 1e6))}" if v is not None else "$NA"

    return "\n".join([
        "## Cumulative Context",
        f"- Total cumulative cost: ${int(round(cumulative.cost_musd * 1e6))}",
        f"- Total cumulative personnel-days: {int(round(cumulative.personnel_days))}",
        f"- Days since fire start: {cumulative.days_since_start}",
        f"- 3-day rolling avg daily cost: {usd(cost.avg3 if cost else None)}",
        f"- 3-day rolling avg daily personnel: {int(round(personnel.avg3)) if personnel else 'NA'}",
        f"- 7-day rolling avg daily cost: {usd(cost.avg7 if cost else None)}",
        f"- 7-day rolling avg daily personnel: {int(round(personnel.avg7)) if personnel else 'NA'}",
        f"- Recent cost trend: {_TREND_WORDS.get(anchors.trends.get('cost'), 'stable')}",
        f"- Recent personnel trend: {_TREND_WORDS.get(anchors.trends.get('personnel'), 'stable')}",
    ])


def build_incremental_prompt(script: PerceptionScript, analogs: list[AnalogRecord],
                             prev: Recommendation, anchors: TemporalAnchors,
                             cumulative: CumulativeTotals) -> PromptPair:
    user = "\n\n".join([
        _previous_block(prev, cumulative),
        _cumulative_block(anchors, cumulative),
        _splice_rag(script.text, format_rag_block(analogs)).rstrip("\n"),
    ]) + "\n"
    return PromptPair(system_text=SYSTEM_PROMPT, user_text=user)


# ---------------------------------------------------------------------------
# loop and day driver


@dataclass
class LoopResult:
    recommendation: Recommendation
    attempts: list[dict] = field(default_factory=list)
    fallback: bool = False


def _fallback_recommendation(analogs: list[AnalogRecord]) -> Recommendation:
    if not analogs:
        raise FallbackUnavailableError("validation failed and no analogs exist for fallback")
    personnel = sorted(a.personnel for a in analogs)
    costs = sorted(a.daily_cost for a in analogs)

    def median(vals):
        mid = len(vals) // 2
        return vals[mid] if len(vals) % 2 == 1 else (vals[mid - 1] + vals[mid]) / 2.0

    text = "Validator fallback: median of retrieved analog days."
    return Recommendation(
        personnel=int(round(median(personnel))),
        daily_budget_usd=int(round(median(costs) * 1e6)),
        confidence=1,
        indicators={k: "moderate" for k in INDICATOR_KEYS},
        rationales={k: text for k in RATIONALE_KEYS},
    )


def _correction_block(failure: ValidationFailure) -> str:
    return "\n".join([
        "## Validation Feedback",
        f"- Previous response rejected: {failure.category} at {failure.path}: {failure.message}",
        "- Return ONLY a corrected JSON object that follows the exact output schema.",
    ])


def reprompt_loop(prompt: PromptPair, client: CompletionClient, bounds: AnalogBounds,
                  analogs: list[AnalogRecord],
                  max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> LoopResult:
    if max_attempts < 1:
        raise PreconditionError("max_attempts must be >= 1")
    attempts: list[dict] = []
    user_text = prompt.user_text
    for _ in range(max_attempts):
        raw = client.complete(prompt.system_text, user_text)
        result = validate_output(raw, bounds)
        if isinstance(result, Recommendation):
            attempts.append({"raw": raw, "failure": None})
            return LoopResult(recommendation=result, attempts=attempts)
        attempts.append({"raw": raw, "failure": {
            "category": result.category, "path": result.path, "message": result.message}})
        user_text = prompt.user_text + "\n" + _correction_block(result) + "\n"
    return LoopResult(recommendation=_fallback_recommendation(analogs),
                      attempts=attempts, fallback=True)


@dataclass(frozen=True)
class DayResult:
    recommendation: Recommendation
    analogs: tuple[AnalogRecord, ...]
    prompt: PromptPair
    attempts: tuple[dict, ...]
    fallback: bool

    def audit_record(self, fire_id: str, date: dt.date, mode: str) -> dict:
        return {
            "fire_id": fire_id,
            "date": date.isoformat(),
            "mode": mode,
            "prompt_sha256": hashlib.sha256(
                (self.prompt.system_text + "\0" + self.prompt.user_text).encode()).hexdigest(),
            "analogs": [{"fire_id": a.fire_id, "date": a.date.isoformat(),
                         "similarity": a.similarity, "personnel": a.personnel,
                         "daily_cost_musd": a.daily_cost} for a in self.analogs],
            "attempts": list(self.attempts),
            "fallback": self.fallback,
            "recommendation": self.recommendation.to_wire(),
        }


def _query_vector(context: EventDayContext, corpus: Corpus,
                  history: list[EventDayContext] | None) -> FeatureVector:
    if context.clusters:
        return vectorize_day(context, corpus.stats)
    if history:
        return vectorize_quiet_day(history, corpus.stats)
    return zero_activity_vector(corpus.stats)


def recommend_day(context: EventDayContext, corpus: Corpus, client: CompletionClient,
                  mode: str, prev: Recommendation | None = None,
                  prev_snapshot: GlobalSnapshot | None = None,
                  cumulative: CumulativeTotals | None = None,
                  history: list[EventDayContext] | None = None,
                  top_k: int = DEFAULT_TOP_K, analog_k: int = DEFAULT_ANALOG_K,
                  weights: tuple[float, ...] | None = None,
                  slack: tuple[float, float] = DEFAULT_BOUND_SLACK,
                  max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> DayResult:
    """One day of the agent: script -> analogs -> prompt -> validated output."""
    if mode not in ("day1", "incremental"):
        raise PreconditionError(f"unknown mode {mode!r}")
    if mode == "incremental":
        if prev is None or prev_snapshot is None or cumulative is None or context.anchors is None:
            raise PreconditionError("incremental mode needs prev, prev_snapshot, cumulative, anchors")
        script = render_script(context, top_k=top_k, prev_snapshot=prev_snapshot)
    else:
        script = render_script(context, top_k=top_k)

    analogs = retrieve_analogs(_query_vector(context, corpus, history),
                               list(corpus.entries), k=analog_k, weights=weights)
    bounds = analog_bounds(analogs, slack)
    if mode == "incremental":
        prompt = build_incremental_prompt(script, analogs, prev, context.anchors, cumulative)
    else:
        prompt = build_day1_prompt(script, analogs)
    loop = reprompt_loop(prompt, client, bounds, analogs, max_attempts=max_attempts)
    return DayResult(
        recommendation=loop.recommendation,
        analogs=tuple(analogs),
        prompt=prompt,
        attempts=tuple(loop.attempts),
        fallback=loop.fallback,
    )

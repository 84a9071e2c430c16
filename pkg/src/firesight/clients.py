"""Completion clients behind one two-string interface.

``complete(system_text, user_text) -> str`` is the whole contract. Three
implementations:

* ``MockCompletionClient`` -- deterministic, offline. A pure function of the
  prompt text: it scrapes the numeric slots out of the perception script and
  analog block and applies the fixed formula documented on the class.
* ``ReplayClient`` -- plays back a recorded transcript (JSON lines with a
  ``response`` field), one response per call.
* ``LiveClient`` -- single-endpoint chat-completion POST; key from an
  environment variable, text taken from the first choice.
"""

from __future__ import annotations

import json
import math
import os
import re
import threading
import urllib.error
import urllib.request
from pathlib import Path
from typing import Protocol

from .errors import ClientError, ReplayExhaustedError


class CompletionClient(Protocol):
    def complete(self, system_text: str, user_text: str) -> str: ...


_RAG_LINE = re.compile(
    r"^- \[(\S+) (\d{4}-\d{2}-\d{2})\] sim=(-?[0-9.]+) \| "
    r"Personnel=([0-9.]+), Daily_Budget=\$([0-9.]+)$",
    re.MULTILINE,
)


def _grab_float(pattern: str, text: str) -> float | None:
    m = re.search(pattern, text)
    if not m or m.group(1) == "NA":
        return None
    return float(m.group(1))


def _median(vals: list[float]) -> float:
    s = sorted(vals)
    mid = len(s) // 2
    return s[mid] if len(s) % 2 == 1 else (s[mid - 1] + s[mid]) / 2.0


def _int_into(v: int, lo: float, hi: float) -> int:
    """Nearest integer inside [lo, hi], when one exists."""
    lo_i, hi_i = math.ceil(lo), math.floor(hi)
    if lo_i > hi_i:
        return v
    return min(max(v, lo_i), hi_i)


def _band(value: float | None, cuts: tuple[float, float, float, float],
          reverse: bool = False) -> str:
    levels = ["minimal", "low", "moderate", "high", "critical"]
    if reverse:
        levels.reverse()
    if value is None:
        return "moderate"
    for cut, level in zip(cuts, levels):
        if value < cut:
            return level
    return levels[4]


class MockCompletionClient:
    """Rule-based stand-in for a live model.

    Output formula (all inputs parsed from the user prompt):

    * ``activity = min(1, points / 200)``; ``sway = 0.85 + 0.3 * activity``
    * with analogs: personnel/budget = analog median * sway
    * without analogs: ``personnel = 100 + 3*points + 0.5*frp``,
      ``budget = 1500 * personnel``
    * incremental days blend 50/50 with the previous values
    * with analogs, results are clamped into [0.25*min, 4*max] so the
      validator's soft bounds always hold
    * indicators come from fixed per-signal thresholds; confidence reflects
      how many analogs were available

    Same prompt in, same JSON out -- no state, no randomness.
    """

    def complete(self, system_text: str, user_text: str) -> str:
        points = _grab_float(r"- Total Fire Points: (\d+|NA)", user_text) or 0.0
        frp = _grab_float(r"- Total FRP: ([0-9.]+|NA) MW", user_text) or 0.0
        population = _grab_float(r"- Total Population Affected: (\d+|NA)", user_text)
        bi = _grab_float(r"BI=([0-9.]+|NA)", user_text)
        stations = _grab_float(r"- Fire stations in area: (\d+|NA)", user_text)
        nearest_mi = _grab_float(r"- Nearest station: ([0-9.]+|NA) mile", user_text)
        prev_personnel = _grab_float(r"- Previous personnel: (\d+) people", user_text)
        prev_budget = _grab_float(r"- Previous daily budget: (\d+)", user_text)
        spreads = [float(s) for s in re.findall(r"spread=([0-9.]+)", user_text)]
        spread = max(spreads) if spreads else None

        analog_personnel = []
        analog_budget = []
        for m in _RAG_LINE.finditer(user_text):
            analog_personnel.append(float(m.group(4)))
            analog_budget.append(float(m.group(5)))

        activity = min(1.0, points / 200.0)
        sway = 0.85 + 0.3 * activity
        if analog_personnel:
            personnel = _median(analog_personnel) * sway
            budget = _median(analog_budget) * sway
        else:
            personnel = 100.0 + 3.0 * points + 0.5 * frp
            budget = personnel * 1500.0
        if prev_personnel is not None:
            personnel = 0.5 * prev_personnel + 0.5 * personnel
        if prev_budget is not None:
            budget = 0.5 * prev_budget + 0.5 * budget
        personnel_i = max(0, int(round(personnel)))
        budget_i = max(0, int(round(budget)))
        if analog_personnel:
            personnel_i = _int_into(personnel_i, 0.25 * min(analog_personnel),
                                    4.0 * max(analog_personnel))
            budget_i = _int_into(budget_i, 0.25 * min(analog_budget),
                                 4.0 * max(analog_budget))
        confidence = 4 if len(analog_personnel) >= 3 else (3 if analog_personnel else 2)

        doc = {
            "analysis_reasoning": {
                "situation_comparison": (
                    f"Detections stand at {int(points)} points with total FRP "
                    f"{frp:.1f} MW; posture follows the observed activity level."),
                "personnel_reasoning": (
                    f"Staffing of {personnel_i} reflects the analog prior "
                    f"adjusted by an activity factor of {sway:.2f}."),
                "budget_reasoning": (
                    f"Daily spend of {budget_i} USD scales the analog median "
                    f"cost by the same activity factor."),
                "overall_reasoning": (
                    f"Exposure {int(population) if population is not None else 'unknown'} "
                    f"and station coverage {int(stations) if stations is not None else 'unknown'} "
                    f"keep the allocation balanced."),
            },
            "resource_requirements": {
                "daily_personnel": {"value": personnel_i, "unit": "people"},
                "daily_budget": {"value": budget_i, "unit": "USD"},
            },
            "confidence": {"score": confidence},
            "intermediate_indicators": {
                "spread_containment_difficulty": _band(spread, (0.2, 0.4, 0.6, 0.8)),
                "resource_access_deployment": _band(nearest_mi, (2.0, 5.0, 10.0, 20.0)),
                "weather_escalation_risk": _band(bi, (20.0, 40.0, 60.0, 80.0)),
                "terrain_operational_complexity": _band(spread, (0.25, 0.45, 0.65, 0.85)),
                "population_exposure_density": _band(population, (1.0, 1000.0, 10000.0, 100000.0)),
                "fire_station_coverage": _band(stations, (1.0, 3.0, 6.0, 10.0), reverse=True),
            },
        }
        return json.dumps(doc, sort_keys=True)


class ReplayClient:
    """Sequential playback of a recorded transcript."""

    def __init__(self, transcript: Path | str | list[str]):
        if isinstance(transcript, (str, Path)):
            lines = Path(transcript).read_text().splitlines()
            self._responses = [json.loads(line)["response"] for line in lines if line.strip()]
        else:
            self._responses = list(transcript)
        self._next = 0

    def complete(self, system_text: str, user_text: str) -> str:
        if self._next >= len(self._responses):
            raise ReplayExhaustedError(
                f"replay transcript exhausted after {self._next} responses")
        resp = self._responses[self._next]
        self._next += 1
        return resp


class LiveClient:
    """Chat-completion POST against a single configurable endpoint."""

    def __init__(self, endpoint: str, model: str, api_key_env: str = "FIRESIGHT_API_KEY",
                 timeout_s: float = 120.0, max_concurrent: int = 4,
                 temperature: float = 0.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.temperature = temperature
        self._gate = threading.Semaphore(max_concurrent)

    def build_payload(self, system_text: str, user_text: str) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": user_text},
            ],
        }

    def complete(self, system_text: str, user_text: str) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise ClientError(f"API key environment variable {self.api_key_env} is not set")
        body = json.dumps(self.build_payload(system_text, user_text)).encode()
        req = urllib.request.Request(
            self.endpoint, data=body, method="POST",
            headers={"Content-Type": "application/json", "Authorization": f"Bearer {key}"},
        )
        with self._gate:
            try:
                with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                    payload = json.loads(resp.read().decode())
            except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
                raise ClientError(f"completion request failed: {exc}") from exc
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ClientError(f"unexpected completion response shape: {exc}") from exc

"""Run configuration: TOML-style file with [section] headers and key = value.

The parser covers the subset this project writes: strings, numbers,
booleans, and flat lists of numbers/strings. Secrets never live in the file;
only the *name* of the API-key environment variable does.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import FormatError, InputError


def _parse_scalar(token: str):
    token = token.strip()
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return token[1:-1]
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        raise FormatError(f"cannot parse config value: {token!r}")


def parse_config_text(text: str) -> dict[str, dict]:
    sections: dict[str, dict] = {}
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise FormatError(f"config line {lineno}: expected key = value")
        if current is None:
            raise FormatError(f"config line {lineno}: key outside any [section]")
        key, value = line.split("=", 1)
        value = value.strip()
        if value.startswith("[") and value.endswith("]"):
            inner = value[1:-1].strip()
            current[key.strip()] = ([] if not inner
                                    else [_parse_scalar(t) for t in inner.split(",")])
        else:
            current[key.strip()] = _parse_scalar(value)
    return sections


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    return repr(v) if isinstance(v, float) else str(v)


@dataclass
class PathsConfig:
    fires_dir: str = "data/fires"
    stations: str = "data/stations.geojson"
    counties: str = "data/counties.geojson"
    landcover: str = "data/landcover.asc"
    population: str = "data/population.asc"
    weather_dir: str = "data/weather"
    ground_truth: str = "data/ground_truth.csv"
    corpus_dir: str = "corpus"
    landcover_risk: str = ""  # optional JSON override of the risk-tier table


@dataclass
class ParamsConfig:
    eps_m: float = 3000.0
    min_pts: int = 3
    top_k_clusters: int = 5
    analog_k: int = 5
    delta_threshold: float = 0.10
    bound_slack_low: float = 0.25
    bound_slack_high: float = 4.0
    analog_weights: list = field(default_factory=list)  # empty = uniform
    county_buffer_km: float = 10.0
    station_radius_km: float = 10.0

    def validate(self):
        if self.eps_m <= 0 or self.min_pts < 1:
            raise InputError("eps_m must be > 0 and min_pts >= 1")
        if self.top_k_clusters < 1 or self.analog_k < 1:
            raise InputError("top_k_clusters and analog_k must be >= 1")
        if not (0 < self.delta_threshold < 1):
            raise InputError("delta_threshold must be in (0, 1)")
        if self.bound_slack_low <= 0 or self.bound_slack_high < 1:
            raise InputError("bound slack factors out of range")


@dataclass
class ClientConfig:
    kind: str = "mock"  # mock | replay | live
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "FIRESIGHT_API_KEY"
    replay_path: str = ""
    max_attempts: int = 3
    timeout_s: float = 120.0
    max_concurrent: int = 4


@dataclass
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    params: ParamsConfig = field(default_factory=ParamsConfig)
    client: ClientConfig = field(default_factory=ClientConfig)
    corpus_fires: list = field(default_factory=list)
    base_dir: Path = field(default_factory=Path)

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p

    def weights(self) -> tuple[float, ...] | None:
        return tuple(float(w) for w in self.params.analog_weights) or None

    def dump(self) -> str:
        """Effective config as config-file text (round-trips through load)."""
        out = []
        for section, obj in (("paths", self.paths), ("params", self.params),
                             ("client", self.client)):
            out.append(f"[{section}]")
            for f in fields(obj):
                out.append(f"{f.name} = {_fmt_value(getattr(obj, f.name))}")
            out.append("")
        out.append("[corpus]")
        out.append(f"fires = {_fmt_value(self.corpus_fires)}")
        return "\n".join(out) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()[:12]


def _apply(obj, section: dict, name: str):
    known = {f.name: f for f in fields(obj)}
    for key, value in section.items():
        if key not in known:
            raise FormatError(f"unknown key {key!r} in [{name}]")
        setattr(obj, key, value)


def load_config(path: Path | str) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    sections = parse_config_text(path.read_text())
    cfg = RunConfig(base_dir=path.resolve().parent)
    if "paths" in sections:
        _apply(cfg.paths, sections["paths"], "paths")
    if "params" in sections:
        _apply(cfg.params, sections["params"], "params")
    if "client" in sections:
        _apply(cfg.client, sections["client"], "client")
    if "corpus" in sections:
        cfg.corpus_fires = list(sections["corpus"].get("fires", []))
    cfg.params.validate()
    return cfg


def require_paths(cfg: RunConfig, *names: str) -> None:
    """Fail fast when a command's input files are missing."""
    for name in names:
        rel = getattr(cfg.paths, name)
        if not rel:
            continue
        p = cfg.resolve(rel)
        if not p.exists():
            raise InputError(f"configured path '{name}' does not exist: {p}")

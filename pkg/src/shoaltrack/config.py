"""Config files: ``key=value`` lines with optional ``[section]`` headers, or JSON.

Sections are ``tracker``, ``connector``, ``school``, ``corruption``, ``tune``
and ``search``. Keys outside any section are routed to whichever section
declares a field of that name. In ``[search]`` each value is a
comma-separated grid, e.g. ``high_thresh = 0.4, 0.5, 0.6``.
"""
from __future__ import annotations

import json
import os
from dataclasses import fields
from pathlib import Path
from typing import Any

from .connector import ConnectorConfig
from .synth import CorruptionConfig, SchoolConfig
from .tracker import TrackerConfig
from .tuner import Param, SearchSpace

ENV_VAR = "SHOALTRACK_CONFIG"
SECTIONS = {
    "tracker": TrackerConfig,
    "connector": ConnectorConfig,
    "school": SchoolConfig,
    "corruption": CorruptionConfig,
}


class ConfigError(ValueError):
    pass


def parse_value(text: str) -> Any:
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null", ""):
        return None
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t.strip("\"'")


def _read_kv(text: str) -> dict[str, dict[str, Any]]:
    out: dict[str, dict[str, Any]] = {"": {}}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if section == "search":
            out[section][key] = [parse_value(v) for v in value.split(",") if v.strip()]
        else:
            out[section][key] = parse_value(value)
    return out


def load_config(path: str | Path | None = None) -> dict[str, dict[str, Any]]:
    """Read ``path`` (or ``$SHOALTRACK_CONFIG``); returns ``{section: {key: value}}``."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text(encoding="utf-8")
    raw = json.loads(text) if p.suffix == ".json" else _read_kv(text)
    flat = raw.pop("", {})
    result: dict[str, dict[str, Any]] = {k.lower(): dict(v) for k, v in raw.items()}
    for key, value in flat.items():
        homes = [s for s, cls in SECTIONS.items() if key in {f.name for f in fields(cls)}]
        if key == "seed":
            homes = ["school", "corruption"]
        if not homes:
            result.setdefault("tune", {})[key] = value
        for home in homes:
            result.setdefault(home, {}).setdefault(key, value)
    return result


def build(cls, *layers: dict[str, Any] | None):
    """Instantiate ``cls`` from defaults overlaid by each layer in turn; ``None`` values are skipped."""
    names = {f.name for f in fields(cls)}
    merged: dict[str, Any] = {}
    for layer in layers:
        for k, v in (layer or {}).items():
            if v is None:
                continue
            if k not in names:
                raise ConfigError(f"unknown {cls.__name__} key {k!r}")
            merged[k] = v
    try:
        return cls(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from exc


def search_space_from(section: dict[str, Any]) -> SearchSpace:
    params = []
    for name, spec in section.items():
        if isinstance(spec, dict):
            params.append(Param(name, **{k: tuple(v) if isinstance(v, list) else v for k, v in spec.items()}))
            continue
        grid = tuple(spec if isinstance(spec, list) else [spec])
        if all(isinstance(g, bool) for g in grid):
            params.append(Param(name, "boolean", grid=grid))
        elif all(isinstance(g, int) and not isinstance(g, bool) for g in grid):
            params.append(Param(name, "integer", grid=grid))
        elif all(isinstance(g, (int, float)) and not isinstance(g, bool) for g in grid):
            params.append(Param(name, "real", grid=tuple(float(g) for g in grid)))
        else:
            params.append(Param(name, "categorical", choices=grid, grid=grid))
    if not params:
        raise ConfigError("empty search space")
    return SearchSpace(tuple(params))


def dump_kv(sections: dict[str, dict[str, Any]]) -> str:
    lines: list[str] = []
    for name, values in sections.items():
        lines.append(f"[{name}]")
        for k, v in values.items():
            lines.append(f"{k} = {'none' if v is None else str(v).lower() if isinstance(v, bool) else v}")
        lines.append("")
    return "\n".join(lines)

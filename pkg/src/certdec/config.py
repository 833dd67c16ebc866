"""Flat ``key = value`` scenario files with decorative section headers.

Keys are global (a section header only groups lines for readers). Comments
start with ``#`` or ``;``. Vectors are comma-separated. Floats are written
with ``repr`` so a dumped file loads back bit-identically.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import Iterable, Optional

from certdec.sim import Scenario, ScenarioError

SECTIONS = {
    "scenario": ("name", "seed", "n_reps"),
    "model": ("theta", "sigma", "correlation", "psi", "rho", "kappa", "epsilon",
              "support", "loss_table"),
    "decision": ("alpha", "C", "u", "gamma"),
    "numerics": ("n_draws_critval", "grid_resolution"),
}
INT_KEYS = {"seed", "n_reps", "n_draws_critval", "grid_resolution"}
VECTOR_KEYS = {"theta", "sigma", "correlation", "psi", "support", "loss_table"}
KEYS = {k for keys in SECTIONS.values() for k in keys}
assert KEYS == {f.name for f in fields(Scenario)}


class ConfigError(ValueError):
    def __init__(self, message: str, where: Optional[str] = None, key: Optional[str] = None):
        self.where = where
        self.key = key
        super().__init__(f"{where}: {message}" if where else message)


def _convert(key: str, raw: str, where: str):
    raw = raw.strip()
    try:
        if key == "name":
            if not raw:
                raise ValueError("empty")
            return raw
        if key in INT_KEYS:
            return int(raw, 0)
        if key in VECTOR_KEYS:
            return tuple(float(x) for x in raw.split(","))
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}", where, key) from None


def parse_lines(lines: Iterable[str], source: str = "<config>"):
    """Return ({key: value}, {key: location}) for a config text."""
    values, where = {}, {}
    for lineno, line in enumerate(lines, start=1):
        loc = f"{source}:{lineno}"
        text = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not text:
            continue
        if text.startswith("["):
            if not text.endswith("]") or text[1:-1].strip() not in SECTIONS:
                raise ConfigError(f"unknown section header {text!r}", loc)
            continue
        if "=" not in text:
            raise ConfigError(f"expected 'key = value', got {text!r}", loc)
        key, raw = (part.strip() for part in text.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", loc, key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set at {where[key]})", loc, key)
        values[key] = _convert(key, raw, loc)
        where[key] = loc
    return values, where


def apply_overrides(values: dict, where: dict, overrides: Iterable[str]):
    for i, item in enumerate(overrides, start=1):
        loc = f"override {i} ({item!r})"
        if "=" not in item:
            raise ConfigError("overrides must look like key=value", loc)
        key, raw = (part.strip() for part in item.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", loc, key)
        values[key] = _convert(key, raw, loc)
        where[key] = loc
    return values, where


def build(values: dict, where: dict) -> Scenario:
    for required in ("name", "theta", "sigma"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r}", key=required)
    try:
        return Scenario(**values)
    except ScenarioError as exc:
        raise ConfigError(str(exc), where.get(exc.field), exc.field) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def loads(text: str, overrides: Iterable[str] = (), source: str = "<config>") -> Scenario:
    values, where = parse_lines(text.splitlines(), source)
    return build(*apply_overrides(values, where, overrides))


def load(path, overrides: Iterable[str] = ()) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return loads(text, overrides, str(path))


def _render(key: str, value) -> str:
    if key in VECTOR_KEYS:
        return ", ".join(repr(float(v)) for v in value)
    if key in INT_KEYS or key == "name":
        return str(value)
    return repr(float(value))


def dumps(s: Scenario) -> str:
    out = []
    for section, keys in SECTIONS.items():
        body = [f"{k} = {_render(k, getattr(s, k))}" for k in keys if getattr(s, k) is not None]
        if body:
            out.append(f"[{section}]")
            out.extend(body)
            out.append("")
    return "\n".join(out)

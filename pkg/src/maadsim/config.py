"""Plain-text ``key value`` configuration files.

Lines are ``key value [value ...]``; ``#`` starts a comment. Lines of the form
``param uniform lo hi`` / ``param normal mean sigma`` / ``param const v`` for
an actuation parameter define a custom randomization level.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .randomization import KINDS, PARAMS, Dist, parse_dist_line


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    values: dict[str, list[str]] = field(default_factory=dict)
    randomization: dict[str, Dist] = field(default_factory=dict)

    def build(self, cls, prefix: str = "", **overrides):
        """Instantiate a dataclass from matching keys (``prefix`` + field name)."""
        kwargs = {}
        for f in fields(cls):
            key = prefix + f.name
            if key not in self.values:
                continue
            raw = self.values[key]
            kwargs[f.name] = _coerce(f.type, raw, key)
        kwargs.update(overrides)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def _coerce(type_name, raw: list[str], key: str):
    t = type_name if isinstance(type_name, str) else getattr(type_name, "__name__", str(type_name))
    try:
        if t.startswith("tuple"):
            return tuple(float(x) for x in raw)
        if len(raw) != 1:
            raise ConfigError(f"{key}: expected one value, got {len(raw)}")
        if t == "int":
            return int(raw[0])
        if t == "float":
            return float(raw[0])
        if t == "bool":
            return raw[0].lower() in ("1", "true", "yes")
        return raw[0]
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_config(text: str, source: str = "<string>") -> Config:
    cfg = Config()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ConfigError(f"{source}:{lineno}: expected 'key value'")
        try:
            if parts[0] in PARAMS and parts[1] in KINDS:
                name, dist = parse_dist_line(parts)
                cfg.randomization[name] = dist
                continue
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        cfg.values[parts[0]] = parts[1:]
    return cfg


def load_config(path) -> Config:
    return parse_config(Path(path).read_text(), str(path))

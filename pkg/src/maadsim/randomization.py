"""Per-agent actuation profiles drawn from named randomization levels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .vehicle import ActuationProfile

PARAMS = ("steer_factor", "motor_k", "gain", "trim", "steer_error")
KINDS = ("uniform", "normal", "const")


@dataclass(frozen=True)
class Dist:
    kind: str
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution {self.kind!r}")
        if self.kind == "uniform" and not self.a <= self.b:
            raise ValueError(f"uniform bounds out of order: {self.a} > {self.b}")
        if self.kind == "normal" and not self.b >= 0:
            raise ValueError("normal sigma must be non-negative")

    @property
    def mean(self) -> float:
        return (self.a + self.b) / 2 if self.kind == "uniform" else self.a

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == "uniform":
            return float(rng.uniform(self.a, self.b))
        if self.kind == "normal":
            return float(rng.normal(self.a, self.b))
        return self.a

    def __str__(self) -> str:
        if self.kind == "const":
            return f"const {self.a:.9g}"
        return f"{self.kind} {self.a:.9g} {self.b:.9g}"


@dataclass(frozen=True)
class RandomizationLevel:
    """Distributions for the five actuation parameters.

    ``steer_error`` describes per-step steering noise: ``normal 0 s`` stores
    ``s`` as the profile's noise sigma rather than drawing a frozen offset.
    """

    name: str
    dists: Mapping[str, Dist]

    def __post_init__(self):
        missing = set(PARAMS) - set(self.dists)
        if missing:
            raise ValueError(f"level {self.name!r} missing parameters: {sorted(missing)}")
        err = self.dists["steer_error"]
        if err.kind == "uniform" or (err.kind == "normal" and err.a != 0.0):
            raise ValueError("steer_error must be 'normal 0 sigma' or 'const sigma'")

    def dumps(self) -> str:
        return "".join(f"{p} {self.dists[p]}\n" for p in PARAMS)


def _level(name, steer, k, gain, trim, err) -> RandomizationLevel:
    return RandomizationLevel(name, dict(zip(PARAMS, (steer, k, gain, trim, err))))


NONE = _level("none", Dist("const", 1.0), Dist("const", 27.0), Dist("const", 1.0),
              Dist("const", 0.0), Dist("const", 0.0))
MEDIUM = _level("medium", Dist("uniform", 0.8, 1.2), Dist("uniform", 22.0, 32.0),
                Dist("uniform", 0.8, 1.2), Dist("uniform", -0.1, 0.1),
                Dist("normal", 0.0, 0.1))
HIGH = _level("high", Dist("uniform", 0.5, 1.5), Dist("uniform", 14.0, 40.0),
              Dist("uniform", 0.5, 1.5), Dist("uniform", -0.15, 0.15),
              Dist("normal", 0.0, 0.5))

LEVELS = {"none": NONE, "medium": MEDIUM, "med": MEDIUM, "high": HIGH}


def sample_profile(level: RandomizationLevel, rng: np.random.Generator) -> ActuationProfile:
    d = level.dists
    err = d["steer_error"]
    return ActuationProfile(
        steer_factor=d["steer_factor"].draw(rng),
        motor_k=d["motor_k"].draw(rng),
        gain=d["gain"].draw(rng),
        trim=d["trim"].draw(rng),
        steer_error_sigma=err.b if err.kind == "normal" else err.a,
    )


def sample_profiles(level: RandomizationLevel, rng: np.random.Generator,
                    n_agents: int) -> list[ActuationProfile]:
    return [sample_profile(level, rng) for _ in range(n_agents)]


def widen(level: RandomizationLevel, factor: float, name: str | None = None) -> RandomizationLevel:
    """Scale every distribution's spread about its center by ``factor``."""
    out = {}
    for p, dist in level.dists.items():
        if dist.kind == "uniform":
            c, h = dist.mean, (dist.b - dist.a) / 2 * factor
            out[p] = Dist("uniform", c - h, c + h)
        elif dist.kind == "normal":
            out[p] = Dist("normal", dist.a, dist.b * factor)
        else:
            out[p] = dist
    return RandomizationLevel(name or f"{level.name}x{factor:g}", out)


def parse_dist_line(parts: list[str]) -> tuple[str, Dist]:
    """Parse ``param kind args...`` tokens."""
    if len(parts) < 3 or parts[0] not in PARAMS or parts[1] not in KINDS:
        raise ValueError(f"bad randomization line: {' '.join(parts)}")
    nums = [float(x) for x in parts[2:]]
    want = 1 if parts[1] == "const" else 2
    if len(nums) != want:
        raise ValueError(f"{parts[1]} takes {want} value(s): {' '.join(parts)}")
    return parts[0], Dist(parts[1], *nums)


def level_from_lines(name: str, lines: Mapping[str, Dist], base: RandomizationLevel = NONE
                     ) -> RandomizationLevel:
    """Build a level, defaulting unspecified parameters to ``base``."""
    dists = dict(base.dists)
    dists.update(lines)
    return RandomizationLevel(name, dists)


def resolve_level(spec: str) -> RandomizationLevel:
    """A built-in level name or a path to a file of distribution lines."""
    if spec in LEVELS:
        return LEVELS[spec]
    from .config import load_config

    cfg = load_config(spec)
    if not cfg.randomization:
        raise ValueError(f"{spec}: no randomization lines")
    return level_from_lines(spec, cfg.randomization)

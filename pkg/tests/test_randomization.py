import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maadsim.config import ConfigError, parse_config
from maadsim.randomization import (
    HIGH,
    LEVELS,
    MEDIUM,
    NONE,
    Dist,
    RandomizationLevel,
    level_from_lines,
    parse_dist_line,
    resolve_level,
    sample_profile,
    sample_profiles,
    widen,
)
from maadsim.vehicle import NOMINAL, ActuationProfile

TABLE = {
    "none": {"steer_factor": ("const", 1.0), "motor_k": ("const", 27.0), "gain": ("const", 1.0),
             "trim": ("const", 0.0), "steer_error": ("const", 0.0)},
    "medium": {"steer_factor": ("uniform", 0.8, 1.2), "motor_k": ("uniform", 22.0, 32.0),
               "gain": ("uniform", 0.8, 1.2), "trim": ("uniform", -0.1, 0.1),
               "steer_error": ("normal", 0.0, 0.1)},
    "high": {"steer_factor": ("uniform", 0.5, 1.5), "motor_k": ("uniform", 14.0, 40.0),
             "gain": ("uniform", 0.5, 1.5), "trim": ("uniform", -0.15, 0.15),
             "steer_error": ("normal", 0.0, 0.5)},
}


@pytest.mark.parametrize("level", [NONE, MEDIUM, HIGH])
def test_builtin_levels_match_table(level):
    for param, spec in TABLE[level.name].items():
        d = level.dists[param]
        assert (d.kind, d.a) == spec[:2]
        if len(spec) == 3:
            assert d.b == spec[2]


def test_none_is_point_mass():
    rng = np.random.default_rng(0)
    profiles = sample_profiles(NONE, rng, 200)
    assert all(p == NOMINAL for p in profiles)
    assert profiles[0] == ActuationProfile(1.0, 27.0, 1.0, 0.0, 0.0)


def test_medium_ranges():
    rng = np.random.default_rng(1)
    for p in sample_profiles(MEDIUM, rng, 2000):
        assert 0.8 <= p.steer_factor <= 1.2
        assert 22.0 <= p.motor_k <= 32.0
        assert 0.8 <= p.gain <= 1.2
        assert -0.1 <= p.trim <= 0.1
        assert p.steer_error_sigma == 0.1


def test_high_monte_carlo():
    rng = np.random.default_rng(2)
    sf = np.array([sample_profile(HIGH, rng).steer_factor for _ in range(100_000)])
    assert abs(sf.mean() - 1.0) <= 0.005
    assert sf.min() >= 0.5 and sf.max() <= 1.5
    # uniform variance (b - a)^2 / 12
    assert sf.var() == pytest.approx(1 / 12, rel=0.02)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["none", "medium", "high"]))
def test_seeded_reproducibility(seed, name):
    level = LEVELS[name]
    a = sample_profiles(level, np.random.default_rng(seed), 5)
    b = sample_profiles(level, np.random.default_rng(seed), 5)
    assert a == b
    for p in a:
        for param in ("steer_factor", "gain", "trim"):
            d = level.dists[param]
            if d.kind == "uniform":
                assert d.a <= getattr(p, param) <= d.b


def test_parameters_independent_across_agents():
    rng = np.random.default_rng(3)
    profiles = sample_profiles(MEDIUM, rng, 3)
    assert len({p.steer_factor for p in profiles}) == 3


def test_dist_validation():
    with pytest.raises(ValueError):
        Dist("uniform", 1.0, 0.5)
    with pytest.raises(ValueError):
        Dist("normal", 0.0, -0.1)
    with pytest.raises(ValueError):
        Dist("beta", 1.0, 1.0)
    with pytest.raises(ValueError):
        level_from_lines("bad", {"steer_error": Dist("uniform", 0.0, 0.1)})


def test_widen():
    w = widen(HIGH, 1.2)
    assert w.dists["steer_factor"].a == pytest.approx(0.4)
    assert w.dists["steer_factor"].b == pytest.approx(1.6)
    assert w.dists["motor_k"].a == pytest.approx(11.4)
    assert w.dists["steer_error"].b == pytest.approx(0.6)
    assert widen(NONE, 3.0).dists == NONE.dists


def test_parse_lines_and_round_trip():
    assert parse_dist_line("gain uniform 0.9 1.1".split()) == ("gain", Dist("uniform", 0.9, 1.1))
    assert parse_dist_line("trim const 0.02".split()) == ("trim", Dist("const", 0.02))
    for bad in ("gain uniform 1", "speed const 1", "gain gamma 1 2"):
        with pytest.raises(ValueError):
            parse_dist_line(bad.split())
    cfg = parse_config(MEDIUM.dumps())
    assert level_from_lines("medium", cfg.randomization) == MEDIUM


def test_partial_level_defaults_to_nominal(tmp_path):
    f = tmp_path / "lvl.txt"
    f.write_text("# only the gain varies\ngain uniform 0.9 1.1\n")
    level = resolve_level(str(f))
    assert level.dists["gain"] == Dist("uniform", 0.9, 1.1)
    assert level.dists["motor_k"] == NONE.dists["motor_k"]
    assert resolve_level("med") is MEDIUM


def test_bad_level_file(tmp_path):
    f = tmp_path / "lvl.txt"
    f.write_text("gain uniform 1.1 0.9\n")
    with pytest.raises((ValueError, ConfigError)):
        resolve_level(str(f))
    with pytest.raises(FileNotFoundError):
        resolve_level(str(tmp_path / "missing.txt"))


def test_level_requires_all_params():
    with pytest.raises(ValueError):
        RandomizationLevel("x", {"gain": Dist("const", 1.0)})

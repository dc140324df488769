import math

import numpy as np
import pytest

from maadsim.env import (
    OBS_DIM,
    Action,
    EnvConfig,
    EpisodeFinishedError,
    EpisodeLog,
    MultiAgentDrivingEnv,
    RewardTerms,
    SpawnError,
    action_semantics,
    compute_reward,
    detect_collisions,
)
from maadsim.randomization import MEDIUM, sample_profiles
from maadsim.track import OUTER
from maadsim.vehicle import BodyTwist, Pose, VehicleState, WheelCommand


def brute_force_collisions(positions, n_agents, radius):
    flags = []
    for i in range(n_agents):
        hit = 0
        for j in range(len(positions)):
            if j != i and math.dist(positions[i], positions[j]) < 2 * radius:
                hit = 1
        flags.append(hit)
    return flags


def random_episode(seed, n_agents=3, n_parked=3, steps=60, level=None):
    cfg = EnvConfig(n_agents=n_agents, n_parked=n_parked, max_steps=steps,
                    v_max=(0.3, 0.4, 0.5)[:n_agents] if n_agents <= 3 else (0.5,) * n_agents)
    env = MultiAgentDrivingEnv(cfg)
    rng = np.random.default_rng(seed)
    profiles = sample_profiles(level, rng, n_agents) if level else None
    res = env.reset(profiles, seed=seed)
    yield env, None, res
    while not res.done:
        actions = rng.choice(4, size=n_agents, p=[0.4, 0.2, 0.1, 0.3])
        res = env.step(actions)
        yield env, actions, res


def test_reset_spawns_distinct_on_track():
    env = MultiAgentDrivingEnv()
    res = env.reset(seed=5)
    pos = env.positions()
    assert pos.shape == (6, 2)
    d = np.hypot(*(pos[:, None] - pos[None]).transpose(2, 0, 1))
    np.fill_diagonal(d, np.inf)
    assert d.min() > 3 * env.config.collision_radius
    assert all(not env.track.is_off_track(p) for p in pos)
    assert res.observations.shape == (3, OBS_DIM)
    assert res.states.shape == (3, 39)
    assert not res.done


def test_reset_deterministic():
    a = MultiAgentDrivingEnv().reset(seed=42)
    env = MultiAgentDrivingEnv()
    b = env.reset(seed=42)
    np.testing.assert_array_equal(a.observations, b.observations)
    np.testing.assert_array_equal(a.states, b.states)


def test_single_agent_starts_at_v_min():
    env = MultiAgentDrivingEnv(EnvConfig(n_agents=1, n_parked=0, v_max=(0.3,)))
    env.reset(seed=0)
    s = env.states[0]
    assert s.commanded_speed == 0.1
    lane_pts = env.track.rings[s.lane_id].points
    assert np.min(np.hypot(*(lane_pts - s.pose[:2]).T)) == 0.0


def test_spawn_failure_is_configuration_error():
    cfg = EnvConfig(n_agents=3, n_parked=60, collision_radius=0.09)
    with pytest.raises(SpawnError):
        MultiAgentDrivingEnv(cfg).reset(seed=0)


def test_config_validation():
    with pytest.raises(ValueError):
        EnvConfig(n_agents=2)  # three v_max values
    with pytest.raises(ValueError):
        EnvConfig(dt=0.0)
    with pytest.raises(ValueError):
        EnvConfig(v_min=0.35)


def _state(speed, lane=0):
    return VehicleState(Pose(0, 0, 0), BodyTwist(speed, 0), WheelCommand(speed, speed), lane, speed)


def test_action_semantics():
    s, flag = action_semantics(_state(0.3), Action.ACCELERATE, 0.1, 0.25, 0.1, 0.3)
    assert s.commanded_speed == 0.3 and flag == 0
    s, _ = action_semantics(_state(0.2), Action.ACCELERATE, 0.1, 0.25, 0.1, 0.3)
    assert s.commanded_speed == pytest.approx(0.225, abs=1e-15)
    s, _ = action_semantics(_state(0.1), Action.BRAKE, 0.1, 0.25, 0.1, 0.3)
    assert s.commanded_speed == 0.1
    s, _ = action_semantics(_state(0.27), Action.NOOP, 0.1, 0.25, 0.1, 0.3)
    assert s.commanded_speed == 0.27
    s1, f1 = action_semantics(_state(0.2, lane=0), Action.CHANGE_LANE, 0.1, 0.25, 0.1, 0.3)
    s2, f2 = action_semantics(s1, Action.CHANGE_LANE, 0.1, 0.25, 0.1, 0.3)
    assert (s1.lane_id, s2.lane_id, f1, f2) == (1, 0, 1, 1)


def test_step_accelerate_and_clamp():
    env = MultiAgentDrivingEnv(EnvConfig(n_agents=1, n_parked=0, v_max=(0.3,)))
    env.reset(seed=1)
    speeds = []
    for _ in range(12):
        env.step([Action.ACCELERATE])
        speeds.append(env.states[0].commanded_speed)
    assert speeds[0] == pytest.approx(0.125)
    assert speeds[-1] == 0.3


def test_lane_change_penalty_in_reward():
    env = MultiAgentDrivingEnv(EnvConfig(n_agents=1, n_parked=0, v_max=(0.3,)))
    env.reset(seed=1)
    lane0 = env.states[0].lane_id
    r1 = env.step([Action.CHANGE_LANE])
    r2 = env.step([Action.CHANGE_LANE])
    assert env.states[0].lane_id == lane0
    assert r1.terms[0].l == 1 and r2.terms[0].l == 1
    assert r1.rewards[0] == pytest.approx(r1.terms[0].v - 0.5)


def test_noop_reward_is_speed():
    env = MultiAgentDrivingEnv(EnvConfig(n_agents=3, n_parked=0))
    env.reset(seed=3)
    for _ in range(30):
        res = env.step([Action.NOOP] * 3)
        for i, term in enumerate(res.terms):
            if not (term.c or term.t):
                assert res.rewards[i] == term.v


def test_episode_length_and_finished_error():
    env = MultiAgentDrivingEnv(EnvConfig(max_steps=5))
    env.reset(seed=0)
    with pytest.raises(EpisodeFinishedError):
        MultiAgentDrivingEnv().step([0, 0, 0])
    done = [env.step([3, 3, 3]).done for _ in range(5)]
    assert done == [False] * 4 + [True]
    with pytest.raises(EpisodeFinishedError):
        env.step([3, 3, 3])


@pytest.mark.parametrize("terms, expected", [
    (RewardTerms(0.3, 0, 0, 0), 0.3),
    (RewardTerms(0.2, 1, 0, 1), -5.3),
    (RewardTerms(0.1, 1, 1, 1), -10.4),
])
def test_compute_reward(terms, expected):
    assert compute_reward(terms) == pytest.approx(expected, abs=1e-12)


def test_detect_collisions_examples():
    r = 0.09
    assert detect_collisions([(0.0, 0.0), (0.18, 0.0)], 2, r).tolist() == [0, 0]
    chain = [(0.0, 0.0), (0.135, 0.0), (0.27, 0.0)]
    assert detect_collisions(chain, 3, r).tolist() == brute_force_collisions(chain, 3, r)
    assert detect_collisions(chain, 3, r).tolist() == [1, 1, 1]
    assert detect_collisions([(0.5, 0.5)], 1, r).tolist() == [0]
    # parked cars (index >= n_agents) are never flagged themselves
    assert detect_collisions([(0, 0), (5, 5), (0.1, 0)], 2, r).tolist() == [1, 0]


def test_collision_flags_match_brute_force_random_episodes():
    for seed in range(5):
        for env, _, res in random_episode(seed, steps=80):
            expected = brute_force_collisions(env.positions().tolist(), 3, 0.09)
            if _ is not None:
                assert [t.c for t in res.terms] == expected


def _place(env, agent_lane, agent_arc, parked):
    """Put agent 0 and parked cars at arc positions on given lanes."""
    def pose_at(lane, arc):
        p = env.track.point_at_arc(lane, arc)
        proj = env.track.project(lane, p)
        return Pose(float(p[0]), float(p[1]), proj.tangent_angle)

    pose = pose_at(agent_lane, agent_arc)
    env.states[0] = VehicleState(pose, BodyTwist(0.2, 0), WheelCommand(0.2, 0.2), agent_lane, 0.2)
    env.parked = [pose_at(lane, arc) for lane, arc in parked]


def test_observation_sentinels_when_alone():
    env = MultiAgentDrivingEnv(EnvConfig(n_agents=1, n_parked=0, v_max=(0.3,)))
    env.reset(seed=0)
    obs = env.observe().observations[0]
    assert obs[3] == obs[4] == env.config.perception_radius
    assert obs[5] == obs[6] == 0.0
    assert obs[7] == 0.0


def test_observation_parked_car_ahead():
    env = MultiAgentDrivingEnv(EnvConfig(n_agents=1, n_parked=1, v_max=(0.3,)))
    env.reset(seed=0)
    # both on the outer bottom straight
    _place(env, OUTER, 0.3, [(OUTER, 0.7)])
    obs = env.observe().observations[0]
    assert obs[3] == pytest.approx(0.4, abs=1e-12)
    assert obs[5] == 0.0
    assert obs[4] == env.config.perception_radius
    # a car behind is not seen
    _place(env, OUTER, 0.7, [(OUTER, 0.3)])
    assert env.observe().observations[0][3] == env.config.perception_radius


def test_observation_off_track_flag():
    env = MultiAgentDrivingEnv(EnvConfig(n_agents=1, n_parked=0, v_max=(0.3,)))
    env.reset(seed=0)
    s = env.states[0]
    env.states[0] = VehicleState(Pose(0.0, -2.0, 0.0), s.twist, s.wheel_actual, s.lane_id, 0.1)
    res = env.observe()
    assert res.observations[0][7] == 1.0
    assert res.terms[0].t == 1


def test_global_state_is_agent_centric():
    env = MultiAgentDrivingEnv()
    res = env.reset(seed=9)
    obs, st = res.observations, res.states
    np.testing.assert_array_equal(st[0, :27], obs.ravel())
    np.testing.assert_array_equal(st[1, :9], obs[1])
    np.testing.assert_array_equal(st[1, 9:18], obs[2])
    np.testing.assert_array_equal(st[2, 9:18], obs[0])


def test_invariants_over_random_episodes():
    cfg = EnvConfig()
    low, high = cfg.obs_bounds()
    for seed in range(4):
        for env, actions, res in random_episode(seed, steps=120, level=MEDIUM):
            assert np.all(res.observations >= low) and np.all(res.observations <= high)
            for i, s in enumerate(env.states):
                assert cfg.v_min <= s.commanded_speed <= cfg.v_max[i]
                assert 0.0 <= res.terms[i].v <= cfg.vehicle.v_wheel_max
                assert res.rewards[i] == compute_reward(res.terms[i])


def test_trajectory_determinism():
    def run():
        out = []
        for env, _, res in random_episode(17, steps=100, level=MEDIUM):
            out.append((env.positions().copy(), res.rewards.copy()))
        return out

    for (pa, ra), (pb, rb) in zip(run(), run()):
        np.testing.assert_array_equal(pa, pb)
        np.testing.assert_array_equal(ra, rb)


def test_episode_log_round_trip(tmp_path):
    log = EpisodeLog()
    for env, actions, res in random_episode(2, steps=20):
        if actions is not None:
            log.record(env.step_count, env, actions, res)
    path = tmp_path / "ep.csv"
    log.write(path)
    rows = EpisodeLog.read(path)
    assert len(rows) == 20 * 3
    assert list(rows[0]) == list(EpisodeLog.COLUMNS)
    for r in rows:
        assert r["reward"] == compute_reward(RewardTerms(r["v"], r["c"], r["t"], r["l"]))

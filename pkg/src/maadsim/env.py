"""Multi-agent driving environment: spawning, the step loop, observations and rewards."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

from . import kernels
from .track import INNER, OUTER, TrackMap, default_track, wrap_angle
from .vehicle import (
    NOMINAL,
    ActuationProfile,
    BodyTwist,
    Pose,
    VehicleParams,
    VehicleState,
    WheelCommand,
    drive,
    steering_angle,
)

OBS_DIM = 9
STATE_FEATURES = 4
OBS_FIELDS = (
    "steering_angle",
    "lane_center_distance",
    "tangent_angle_error",
    "dist_same_lane_ahead",
    "dist_opposite_lane_ahead",
    "vel_same_lane_neighbor",
    "vel_opposite_lane_neighbor",
    "off_track",
    "own_speed",
)
SPAWN_ATTEMPTS = 1000


class Action(IntEnum):
    ACCELERATE = 0
    BRAKE = 1
    CHANGE_LANE = 2
    NOOP = 3


class SpawnError(ValueError):
    """The track is too crowded to place every car with the required gaps."""


class EpisodeFinishedError(RuntimeError):
    """``step`` was called after the episode reached ``max_steps``."""


@dataclass(frozen=True)
class EnvConfig:
    n_agents: int = 3
    n_parked: int = 3
    max_steps: int = 400
    dt: float = 0.1
    v_min: float = 0.1
    v_max: tuple[float, ...] = (0.3, 0.4, 0.5)
    accel: float = 0.25
    perception_radius: float = 1.0
    collision_radius: float = 0.09
    seed: int = 0
    vehicle: VehicleParams = field(default_factory=VehicleParams)

    def __post_init__(self):
        object.__setattr__(self, "v_max", tuple(float(v) for v in self.v_max))
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if self.n_parked < 0 or self.max_steps < 1:
            raise ValueError("n_parked must be >= 0 and max_steps >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if len(self.v_max) != self.n_agents:
            raise ValueError(f"need {self.n_agents} v_max values, got {len(self.v_max)}")
        if not self.v_min <= min(self.v_max):
            raise ValueError("v_min must not exceed any v_max")
        if self.v_min < 0 or max(self.v_max) > self.vehicle.v_wheel_max:
            raise ValueError("speed limits must lie in [0, v_wheel_max]")

    @property
    def state_dim(self) -> int:
        return (OBS_DIM + STATE_FEATURES) * self.n_agents

    def obs_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        r, vw = self.perception_radius, self.vehicle.v_wheel_max
        low = np.array([-math.pi, -r, -math.pi, 0.0, 0.0, -vw, -vw, 0.0, 0.0])
        high = np.array([math.pi, r, math.pi, r, r, vw, vw, 1.0, vw])
        return low, high


@dataclass(frozen=True)
class RewardTerms:
    v: float
    c: int
    t: int
    l: int


def compute_reward(terms: RewardTerms) -> float:
    return terms.v - 5 * terms.c - 5 * terms.t - 0.5 * terms.l


@dataclass
class StepResult:
    observations: np.ndarray  # (n_agents, OBS_DIM)
    states: np.ndarray  # (n_agents, state_dim), agent-centric ordering
    rewards: np.ndarray
    terms: list[RewardTerms]
    done: bool


def action_semantics(state: VehicleState, action: Action, dt: float, accel: float,
                     v_min: float, v_max: float) -> tuple[VehicleState, int]:
    """Apply a high-level decision; returns the new state and the lane-change flag."""
    action = Action(action)
    speed = state.commanded_speed
    if action == Action.ACCELERATE:
        speed += accel * dt
    elif action == Action.BRAKE:
        speed -= accel * dt
    elif action == Action.CHANGE_LANE:
        return VehicleState(state.pose, state.twist, state.wheel_actual,
                            1 - state.lane_id, speed), 1
    speed = min(max(speed, v_min), v_max)
    return VehicleState(state.pose, state.twist, state.wheel_actual, state.lane_id, speed), 0


def detect_collisions(positions, n_agents: int, collision_radius: float) -> np.ndarray:
    """Flag agent i when any other car is closer than ``2 * collision_radius``."""
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 2)
    return kernels.collision_flags(pos, n_agents, float(collision_radius))


class MultiAgentDrivingEnv:
    """N policy-driven cars plus parked obstacles on a two-lane loop.

    Agents advance sequentially in index order inside one step; collisions,
    off-track flags and observations are evaluated after every car has moved.
    """

    def __init__(self, config: EnvConfig | None = None, track: TrackMap | None = None):
        self.config = config or EnvConfig()
        self.track = track or default_track()
        self.states: list[VehicleState] = []
        self.parked: list[Pose] = []
        self.profiles: list[ActuationProfile] = []
        self.speeds = np.zeros(self.config.n_agents)
        self.step_count = 0
        self._noise_rng = np.random.default_rng(0)
        self._started = False

    @property
    def n_agents(self) -> int:
        return self.config.n_agents

    @property
    def done(self) -> bool:
        return self.step_count >= self.config.max_steps

    # -- reset -----------------------------------------------------------

    def reset(self, profiles: Sequence[ActuationProfile] | None = None,
              seed: int | None = None) -> StepResult:
        cfg = self.config
        spawn_ss, noise_ss = np.random.SeedSequence(cfg.seed if seed is None else seed).spawn(2)
        self._noise_rng = np.random.default_rng(noise_ss)
        if profiles is None:
            profiles = [NOMINAL] * cfg.n_agents
        if len(profiles) != cfg.n_agents:
            raise ValueError("one actuation profile per agent required")
        self.profiles = list(profiles)

        slots = self._spawn(np.random.default_rng(spawn_ss))
        self.states = []
        for lane, idx in slots[: cfg.n_agents]:
            pose = self._waypoint_pose(lane, idx)
            self.states.append(VehicleState(
                pose, BodyTwist(cfg.v_min, 0.0), WheelCommand(cfg.v_min, cfg.v_min),
                lane, cfg.v_min))
        self.parked = [self._waypoint_pose(lane, idx) for lane, idx in slots[cfg.n_agents:]]
        self.speeds = np.full(cfg.n_agents, cfg.v_min)
        self.step_count = 0
        self._started = True
        zeros = np.zeros(cfg.n_agents, dtype=np.int64)
        return self._result(zeros, zeros)

    def _waypoint_pose(self, lane: int, idx: int) -> Pose:
        ring = self.track.rings[lane]
        x, y = ring.points[idx]
        return Pose(float(x), float(y), float(ring.heading[idx]))

    def _spawn(self, rng: np.random.Generator) -> list[tuple[int, int]]:
        cfg = self.config
        n_cars = cfg.n_agents + cfg.n_parked
        counts = [len(r.points) for r in self.track.rings]
        total = sum(counts)
        if n_cars > total:
            raise SpawnError("more cars than waypoints")
        min_gap = 3 * cfg.collision_radius
        for _ in range(SPAWN_ATTEMPTS):
            flat = rng.choice(total, size=n_cars, replace=False)
            slots = [(0, int(f)) if f < counts[0] else (1, int(f - counts[0])) for f in flat]
            pts = np.array([self.track.rings[lane].points[i] for lane, i in slots])
            d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
            np.fill_diagonal(d, np.inf)
            if d.min() > min_gap:
                return slots
        raise SpawnError(f"could not place {n_cars} cars after {SPAWN_ATTEMPTS} attempts")

    # -- step ------------------------------------------------------------

    def step(self, actions, skip_motion=None) -> StepResult:
        """Advance one control period.

        ``skip_motion`` optionally marks agents whose pose update is dropped
        this step (used by the pseudo-real wrapper).
        """
        if not self._started:
            raise EpisodeFinishedError("reset() must be called before step()")
        if self.done:
            raise EpisodeFinishedError("episode already finished; call reset()")
        cfg = self.config
        vp = cfg.vehicle
        if len(actions) != cfg.n_agents:
            raise ValueError(f"expected {cfg.n_agents} actions")
        lane_flags = np.zeros(cfg.n_agents, dtype=np.int64)
        for i in range(cfg.n_agents):
            state, lane_flags[i] = action_semantics(
                self.states[i], actions[i], cfg.dt, cfg.accel, cfg.v_min, cfg.v_max[i])
            proj = self.track.project(state.lane_id, state.pose[:2])
            goal = self.track.goal_point(state.lane_id, proj, vp.lookahead)
            sigma = self.profiles[i].steer_error_sigma
            noise = float(self._noise_rng.normal(0.0, sigma)) if sigma > 0 else 0.0
            move = skip_motion is None or not skip_motion[i]
            new = drive(state, goal, self.profiles[i], noise, cfg.dt, vp, move)
            self.speeds[i] = math.hypot(new.pose.x - state.pose.x,
                                        new.pose.y - state.pose.y) / cfg.dt
            self.states[i] = new
        self.step_count += 1

        positions = self.positions()
        collided = detect_collisions(positions, cfg.n_agents, cfg.collision_radius)
        return self._result(collided, lane_flags, positions)

    def observe(self) -> StepResult:
        """Observations of the current world without advancing time (no penalty flags)."""
        zeros = np.zeros(self.config.n_agents, dtype=np.int64)
        return self._result(zeros, zeros)

    def positions(self) -> np.ndarray:
        cars = [(s.pose.x, s.pose.y) for s in self.states] + [(p.x, p.y) for p in self.parked]
        return np.array(cars, dtype=np.float64)

    # -- observation -----------------------------------------------------

    def _result(self, collided, lane_flags, positions=None) -> StepResult:
        cfg = self.config
        if positions is None:
            positions = self.positions()
        proj = [[a.tolist() for a in self.track.project_many(lane, positions)[1:]]
                for lane in (INNER, OUTER)]
        half = self.track.half_width
        lat_in, lat_out = proj[INNER][0], proj[OUTER][0]
        off = [int(min(abs(lat_in[j]), abs(lat_out[j])) > half) for j in range(cfg.n_agents)]
        physical_lane = [int(abs(lo) < abs(li)) for li, lo in zip(lat_in, lat_out)]
        obs = self._observations(proj, physical_lane, off)
        terms = [RewardTerms(float(self.speeds[i]), int(collided[i]), off[i], int(lane_flags[i]))
                 for i in range(cfg.n_agents)]
        rewards = np.array([compute_reward(t) for t in terms])
        return StepResult(obs, self.global_states(obs), rewards, terms, self.done)

    def _observations(self, proj, physical_lane, off) -> np.ndarray:
        """Build each agent's local view from per-lane (lateral, tangent, arc) lists."""
        cfg = self.config
        n_cars = len(physical_lane)
        radius = cfg.perception_radius
        vw = cfg.vehicle.v_wheel_max
        headings = [s.pose.theta for s in self.states] + [p.theta for p in self.parked]
        speeds = self.speeds.tolist() + [0.0] * len(self.parked)
        lengths = (self.track.lane_length(INNER), self.track.lane_length(OUTER))
        obs = np.empty((cfg.n_agents, OBS_DIM))
        for i, s in enumerate(self.states):
            lane = s.lane_id
            lat, tangent, arc = (a[i] for a in proj[lane])
            goal = self.track.point_at_arc(lane, arc + cfg.vehicle.lookahead)
            neighbor = []
            for ln in (lane, 1 - lane):
                arcs, tangents = proj[ln][2], proj[ln][1]
                best_gap, best_v = radius, 0.0
                for j in range(n_cars):
                    if j == i or physical_lane[j] != ln:
                        continue
                    gap = (arcs[j] - arcs[i]) % lengths[ln]
                    if gap <= radius and gap < best_gap:
                        best_gap = gap
                        v_long = speeds[j] * math.cos(headings[j] - tangents[j])
                        best_v = min(max(v_long, -vw), vw)
                neighbor.append((best_gap, best_v))
            obs[i] = (
                steering_angle(s.pose, goal),
                min(max(lat, -radius), radius),
                wrap_angle(s.pose.theta - tangent),
                neighbor[0][0],
                neighbor[1][0],
                neighbor[0][1],
                neighbor[1][1],
                float(off[i]),
                speeds[i],
            )
        return obs

    def global_states(self, obs: np.ndarray) -> np.ndarray:
        """Critic inputs: every agent's view, rotated so row i starts with agent i."""
        n = self.config.n_agents
        kin = np.array([(s.pose.x, s.pose.y, s.pose.theta, v)
                        for s, v in zip(self.states, self.speeds.tolist())])
        order = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
        return np.concatenate([obs[order].reshape(n, -1), kin[order].reshape(n, -1)], axis=1)


class EpisodeLog:
    """Per-(step, agent) rows of one episode, writable as CSV."""

    COLUMNS = ("step", "agent", "x", "y", "theta", "v", "action", "reward", "c", "t", "l", "lane")

    def __init__(self):
        self.rows: list[tuple] = []

    def record(self, step: int, env: MultiAgentDrivingEnv, actions, result: StepResult) -> None:
        for i, (s, term) in enumerate(zip(env.states, result.terms)):
            self.rows.append((step, i, s.pose.x, s.pose.y, s.pose.theta, term.v, int(actions[i]),
                              float(result.rewards[i]), term.c, term.t, term.l, s.lane_id))

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in self.rows:
                w.writerow([repr(x) if isinstance(x, float) else x for x in row])

    @staticmethod
    def read(path) -> list[dict]:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        ints = ("step", "agent", "action", "c", "t", "l", "lane")
        return [{k: (int(v) if k in ints else float(v)) for k, v in r.items()} for r in rows]

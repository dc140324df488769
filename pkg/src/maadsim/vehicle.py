"""Differential-drive command chain: steering, kinematics, actuation and motor lag."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

from .track import wrap_angle

NOMINAL_MOTOR_K = 27.0


class Pose(NamedTuple):
    x: float
    y: float
    theta: float


class BodyTwist(NamedTuple):
    v: float
    omega: float


class WheelCommand(NamedTuple):
    v_left: float
    v_right: float


@dataclass(frozen=True)
class ActuationProfile:
    steer_factor: float = 1.0
    motor_k: float = NOMINAL_MOTOR_K
    gain: float = 1.0
    trim: float = 0.0
    steer_error_sigma: float = 0.0

    def __post_init__(self):
        if not (self.steer_factor > 0 and self.motor_k > 0 and self.gain > 0):
            raise ValueError(f"steer_factor, motor_k and gain must be positive: {self}")
        if not self.steer_error_sigma >= 0:
            raise ValueError("steer_error_sigma must be non-negative")

    def compose(self, other: "ActuationProfile") -> "ActuationProfile":
        """Stack a second distortion on top of this one.

        Multiplicative terms multiply, trims add and noise sigmas add in
        quadrature. Composing with the nominal profile is exact identity.
        """
        return ActuationProfile(
            steer_factor=self.steer_factor * other.steer_factor,
            motor_k=self.motor_k * (other.motor_k / NOMINAL_MOTOR_K),
            gain=self.gain * other.gain,
            trim=self.trim + other.trim,
            steer_error_sigma=math.hypot(self.steer_error_sigma, other.steer_error_sigma),
        )


NOMINAL = ActuationProfile()


@dataclass(frozen=True)
class VehicleParams:
    baseline: float = 0.1
    k_steer: float = 4.0
    omega_max: float = 4.0
    tau: float = 0.1
    lookahead: float = 0.15
    v_wheel_max: float = 1.0


@dataclass(frozen=True)
class VehicleState:
    pose: Pose
    twist: BodyTwist
    wheel_actual: WheelCommand
    lane_id: int
    commanded_speed: float


def steering_angle(pose: Pose, goal) -> float:
    dx = goal[0] - pose.x
    dy = goal[1] - pose.y
    if math.hypot(dx, dy) < 1e-9:
        return 0.0
    return wrap_angle(math.atan2(dy, dx) - pose.theta)


def steer_to_twist(alpha: float, speed: float, profile: ActuationProfile,
                   noise_draw: float = 0.0, k_steer: float = 4.0,
                   omega_max: float = 4.0) -> BodyTwist:
    omega = k_steer * (profile.steer_factor * alpha + noise_draw)
    return BodyTwist(speed, min(max(omega, -omega_max), omega_max))


def inverse_kinematics(twist: BodyTwist, baseline: float) -> WheelCommand:
    half = twist.omega * baseline / 2
    return WheelCommand(twist.v - half, twist.v + half)


def forward_kinematics(cmd: WheelCommand, baseline: float) -> BodyTwist:
    return BodyTwist((cmd.v_left + cmd.v_right) / 2, (cmd.v_right - cmd.v_left) / baseline)


def _clamp(x: float, limit: float) -> float:
    return min(max(x, -limit), limit)


def apply_actuation(cmd: WheelCommand, profile: ActuationProfile,
                    v_wheel_max: float = 1.0) -> WheelCommand:
    """Distort wheel speeds by gain, trim and the normalized motor constant."""
    scale = profile.motor_k / NOMINAL_MOTOR_K
    return WheelCommand(
        _clamp((profile.gain - profile.trim) * scale * cmd.v_left, v_wheel_max),
        _clamp((profile.gain + profile.trim) * scale * cmd.v_right, v_wheel_max),
    )


def motor_lag(actual: WheelCommand, target: WheelCommand, dt: float, tau: float) -> WheelCommand:
    if tau == 0:
        return target
    a = 1.0 - math.exp(-dt / tau)
    return WheelCommand(
        actual.v_left + (target.v_left - actual.v_left) * a,
        actual.v_right + (target.v_right - actual.v_right) * a,
    )


def integrate_pose(pose: Pose, twist: BodyTwist, dt: float) -> Pose:
    """Exact integration of a constant twist over ``dt``."""
    v, w = twist
    th = pose.theta
    if abs(w) < 1e-8:
        return Pose(pose.x + v * dt * math.cos(th), pose.y + v * dt * math.sin(th), th)
    th1 = th + w * dt
    r = v / w
    return Pose(
        pose.x + r * (math.sin(th1) - math.sin(th)),
        pose.y + r * (math.cos(th) - math.cos(th1)),
        wrap_angle(th1),
    )


def drive(state: VehicleState, goal, profile: ActuationProfile, noise_draw: float,
          dt: float, params: VehicleParams, move: bool = True) -> VehicleState:
    """One pass of the command chain from goal point to new pose.

    With ``move=False`` the motors still respond but the pose is held, which
    models a dropped motion update.
    """
    alpha = steering_angle(state.pose, goal)
    twist = steer_to_twist(alpha, state.commanded_speed, profile, noise_draw,
                           params.k_steer, params.omega_max)
    target = apply_actuation(inverse_kinematics(twist, params.baseline), profile,
                             params.v_wheel_max)
    wheels = motor_lag(state.wheel_actual, target, dt, params.tau)
    body = forward_kinematics(wheels, params.baseline)
    pose = integrate_pose(state.pose, body, dt) if move else state.pose
    return replace(state, pose=pose, twist=body, wheel_actual=wheels)

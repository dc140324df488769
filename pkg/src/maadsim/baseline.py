"""Rule-based comparison policy: RSS following distances plus a gap-acceptance lane change."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import Action
from .vehicle import VehicleState

# observation columns used here
_GAP_SAME, _GAP_OPP, _V_SAME, _V_OPP = 3, 4, 5, 6


@dataclass(frozen=True)
class RssParams:
    response_time: float = 0.1
    max_accel: float = 0.25
    min_brake: float = 0.25
    max_brake: float = 0.25

    def __post_init__(self):
        if min(self.response_time, self.max_accel, self.min_brake, self.max_brake) <= 0:
            raise ValueError("RSS parameters must be positive")
        if self.min_brake > self.max_brake:
            raise ValueError("min_brake must not exceed max_brake")


def rss_safe_distance(v_rear: float, v_front: float, p: RssParams = RssParams()) -> float:
    """Minimum longitudinal gap keeping the rear car safe under worst-case braking."""
    rho = p.response_time
    d = (v_rear * rho + 0.5 * p.max_accel * rho ** 2
         + (v_rear + rho * p.max_accel) ** 2 / (2 * p.min_brake)
         - v_front ** 2 / (2 * p.max_brake))
    return max(0.0, d)


def rule_based_action(obs, state: VehicleState, v_max: float,
                      p: RssParams = RssParams()) -> Action:
    v = state.commanded_speed
    gap, v_front = obs[_GAP_SAME], obs[_V_SAME]
    safe = rss_safe_distance(v, max(v_front, 0.0), p)
    if gap < safe:
        opp_gap, v_opp = obs[_GAP_OPP], max(obs[_V_OPP], 0.0)
        # the opposite-lane reading stands in for both the lead and the rear gap
        if opp_gap > rss_safe_distance(v, v_opp, p) and opp_gap > rss_safe_distance(v_opp, v, p):
            return Action.CHANGE_LANE
        return Action.BRAKE
    if gap > 2 * safe and v < v_max:
        return Action.ACCELERATE
    return Action.NOOP


class RuleBasedPolicy:
    """Adapter giving the rule set the same call shape as a learned policy."""

    name = "rule-based"

    def __init__(self, params: RssParams = RssParams()):
        self.params = params

    def __call__(self, observations: np.ndarray, env) -> np.ndarray:
        cfg = env.config
        return np.array([
            int(rule_based_action(observations[i], env.states[i], cfg.v_max[i], self.params))
            for i in range(cfg.n_agents)
        ], dtype=np.int64)

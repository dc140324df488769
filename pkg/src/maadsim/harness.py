"""Evaluation harness: pseudo-real perturbations, run metrics and policy comparison."""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .env import OBS_DIM, Action, EnvConfig, EpisodeLog, MultiAgentDrivingEnv, StepResult
from .randomization import HIGH, NONE, RandomizationLevel, level_from_lines, sample_profiles, widen
from .track import TrackMap

METRIC_COLUMNS = ("mean_reward", "mean_speed", "track_exits", "collisions", "lane_changes")
COUNT_METRICS = ("track_exits", "collisions", "lane_changes")


# -- pseudo-real profile ---------------------------------------------------


@dataclass(frozen=True)
class PseudoRealProfile:
    """Held-out perturbations standing in for hardware: delay, bias, noise, dropped updates."""

    action_delay_steps: int = 0
    bias_level: RandomizationLevel = NONE
    obs_noise_sigma: tuple[float, ...] = (0.0,) * OBS_DIM
    update_jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "obs_noise_sigma", tuple(float(s) for s in self.obs_noise_sigma))
        if self.action_delay_steps < 0:
            raise ValueError("action_delay_steps must be >= 0")
        if not 0.0 <= self.update_jitter <= 1.0:
            raise ValueError("update_jitter must lie in [0, 1]")
        if len(self.obs_noise_sigma) != OBS_DIM or min(self.obs_noise_sigma) < 0:
            raise ValueError(f"obs_noise_sigma needs {OBS_DIM} non-negative values")

    @classmethod
    def default(cls) -> "PseudoRealProfile":
        return cls(
            action_delay_steps=1,
            bias_level=widen(HIGH, 1.2, "held-out"),
            obs_noise_sigma=(0.01,) * 5 + (0.0,) * 4,
            update_jitter=0.05,
        )

    def dumps(self) -> str:
        lines = [
            f"action_delay_steps {self.action_delay_steps}",
            f"update_jitter {self.update_jitter:.9g}",
            "obs_noise_sigma " + " ".join(f"{s:.9g}" for s in self.obs_noise_sigma),
        ]
        return "\n".join(lines) + "\n" + self.bias_level.dumps()

    @classmethod
    def from_config(cls, cfg) -> "PseudoRealProfile":
        noise = cfg.values.get("obs_noise_sigma", ["0"])
        if len(noise) == 1:
            noise = noise * OBS_DIM
        return cls(
            action_delay_steps=int(cfg.values.get("action_delay_steps", ["0"])[0]),
            bias_level=level_from_lines("held-out", cfg.randomization),
            obs_noise_sigma=tuple(float(x) for x in noise),
            update_jitter=float(cfg.values.get("update_jitter", ["0"])[0]),
        )


def load_pseudo_real(spec: str) -> PseudoRealProfile:
    if spec == "default":
        return PseudoRealProfile.default()
    from .config import load_config

    return PseudoRealProfile.from_config(load_config(spec))


class PseudoRealEnv:
    """Wraps an environment so its step I/O passes through a pseudo-real profile."""

    def __init__(self, env: MultiAgentDrivingEnv, profile: PseudoRealProfile,
                 rng: np.random.Generator):
        self.env = env
        self.profile = profile
        self.rng = rng
        self.bias = []
        self._queue: deque = deque()
        low, high = env.config.obs_bounds()
        self._low, self._high = low, high
        self._sigma = np.array(profile.obs_noise_sigma)
        self._noisy = np.flatnonzero(self._sigma > 0)

    def __getattr__(self, name):
        return getattr(self.env, name)

    def reset(self, profiles=None, seed=None) -> StepResult:
        n = self.env.config.n_agents
        base = list(profiles) if profiles is not None else None
        self.bias = sample_profiles(self.profile.bias_level, self.rng, n)
        if base is None:
            composed = self.bias
        else:
            composed = [b.compose(p) for b, p in zip(self.bias, base)]
        self._queue = deque(
            [np.full(n, int(Action.NOOP), dtype=np.int64)] * self.profile.action_delay_steps)
        return self._perturb(self.env.reset(composed, seed=seed))

    def delayed(self, actions) -> np.ndarray:
        """Push this step's actions and pop the ones due now."""
        actions = np.asarray(actions, dtype=np.int64)
        if self.profile.action_delay_steps == 0:
            return actions
        self._queue.append(actions.copy())
        return self._queue.popleft()

    def step(self, actions) -> StepResult:
        applied = self.delayed(actions)
        skip = None
        if self.profile.update_jitter > 0:
            skip = self.rng.random(self.env.config.n_agents) < self.profile.update_jitter
        return self._perturb(self.env.step(applied, skip_motion=skip))

    def _perturb(self, res: StepResult) -> StepResult:
        if self._noisy.size:
            obs = res.observations.copy()
            cols = self._noisy
            obs[:, cols] += self.rng.normal(0.0, 1.0, (len(obs), cols.size)) * self._sigma[cols]
            obs[:, cols] = np.clip(obs[:, cols], self._low[cols], self._high[cols])
            res = StepResult(obs, res.states, res.rewards, res.terms, res.done)
        return res


def apply_pseudo_real(env: MultiAgentDrivingEnv, profile: PseudoRealProfile,
                      rng: np.random.Generator) -> PseudoRealEnv:
    return PseudoRealEnv(env, profile, rng)


# -- metrics ---------------------------------------------------------------


@dataclass
class RunMetrics:
    mean_reward: float
    mean_speed: float
    track_exits: int
    collisions: int
    lane_changes: int

    def row(self) -> list:
        return [getattr(self, c) for c in METRIC_COLUMNS]


@dataclass
class MetricsAccumulator:
    """Live per-run tallies; counts are rising edges of the per-agent flags."""

    n_agents: int
    reward_sum: float = 0.0
    speed_sum: float = 0.0
    steps: int = 0
    exits: int = 0
    collisions: int = 0
    lane_changes: int = 0
    _prev_t: list = field(default_factory=list)
    _prev_c: list = field(default_factory=list)

    def __post_init__(self):
        self._prev_t = [0] * self.n_agents
        self._prev_c = [0] * self.n_agents

    def add(self, res: StepResult) -> None:
        self.steps += 1
        for i, term in enumerate(res.terms):
            self.reward_sum += float(res.rewards[i])
            self.speed_sum += term.v
            self.exits += int(term.t and not self._prev_t[i])
            self.collisions += int(term.c and not self._prev_c[i])
            self.lane_changes += term.l
            self._prev_t[i], self._prev_c[i] = term.t, term.c

    def result(self) -> RunMetrics:
        denom = max(self.steps * self.n_agents, 1)
        return RunMetrics(self.reward_sum / denom, self.speed_sum / denom,
                          self.exits, self.collisions, self.lane_changes)


def metrics_from_log(rows: Sequence[dict], n_agents: int) -> RunMetrics:
    """Recompute run metrics from episode log rows (``EpisodeLog.read`` output)."""
    acc = MetricsAccumulator(n_agents)
    rows = sorted(rows, key=lambda r: (r["step"], r["agent"]))
    from .env import RewardTerms

    for k in range(0, len(rows), n_agents):
        chunk = rows[k:k + n_agents]
        terms = [RewardTerms(r["v"], r["c"], r["t"], r["l"]) for r in chunk]
        acc.add(StepResult(None, None, np.array([r["reward"] for r in chunk]), terms, False))
    return acc.result()


# -- evaluation ------------------------------------------------------------

PolicyFn = Callable[[np.ndarray, MultiAgentDrivingEnv], np.ndarray]


def greedy_policy_fn(policy) -> PolicyFn:
    def act(obs, env):
        return policy.act(obs, greedy=True)[0]
    return act


def run_seeds(seed: int, run: int) -> tuple[int, np.random.Generator]:
    env_ss, real_ss = np.random.SeedSequence([seed, run]).spawn(2)
    return int(env_ss.generate_state(1)[0]), np.random.default_rng(real_ss)


def evaluate(policy_fn: PolicyFn, env_config: EnvConfig, runs: int, seed: int = 0,
             pseudo_real: PseudoRealProfile | None = None, track: TrackMap | None = None,
             log_dir=None) -> list[RunMetrics]:
    """Run ``runs`` episodes; run k uses the same spawn for every policy (paired runs)."""
    out = []
    for run in range(runs):
        env_seed, real_rng = run_seeds(seed, run)
        env = MultiAgentDrivingEnv(env_config, track)
        if pseudo_real is not None:
            env = apply_pseudo_real(env, pseudo_real, real_rng)
        res = env.reset(seed=env_seed)
        acc = MetricsAccumulator(env_config.n_agents)
        log = EpisodeLog() if log_dir is not None else None
        while not res.done:
            actions = policy_fn(res.observations, env)
            res = env.step(actions)
            acc.add(res)
            if log is not None:
                inner = env.env if isinstance(env, PseudoRealEnv) else env
                log.record(inner.step_count, inner, actions, res)
        if log is not None:
            Path(log_dir).mkdir(parents=True, exist_ok=True)
            log.write(Path(log_dir) / f"run_{run:03d}.csv")
        out.append(acc.result())
    return out


def summarize(metrics: Sequence[RunMetrics]) -> tuple[list[float], list[float]]:
    arr = np.array([m.row() for m in metrics], dtype=np.float64)
    mean = arr.mean(axis=0)
    std = arr.std(axis=0, ddof=1) if len(arr) > 1 else np.zeros(arr.shape[1])
    return mean.tolist(), std.tolist()


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_metrics(metrics: Sequence[RunMetrics], path) -> None:
    mean, std = summarize(metrics)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("run", *METRIC_COLUMNS))
        for k, m in enumerate(metrics):
            w.writerow([k, *map(_fmt, m.row())])
        w.writerow(["mean", *map(_fmt, mean)])
        w.writerow(["std", *map(_fmt, std)])


class MetricsParseError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


def read_metrics(path) -> list[RunMetrics]:
    """Per-run rows of a metrics CSV (summary rows are skipped)."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != ("run", *METRIC_COLUMNS):
            raise MetricsParseError(path, 1, f"unexpected header {header}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise MetricsParseError(path, line, f"expected {len(header)} fields, got {len(row)}")
            if row[0] in ("mean", "std"):
                continue
            try:
                int(row[0])
                vals = [float(row[1]), float(row[2])] + [int(x) for x in row[3:]]
            except ValueError as exc:
                raise MetricsParseError(path, line, str(exc)) from None
            out.append(RunMetrics(*vals))
    if not out:
        raise MetricsParseError(path, 1, "no per-run rows")
    return out


# -- comparison ------------------------------------------------------------


@dataclass
class Comparison:
    names: list[str]
    means: np.ndarray  # (policies, metrics)
    stds: np.ndarray
    ratios: np.ndarray  # mean_reward[i] / mean_reward[j]


def compare(named: Sequence[tuple[str, Sequence[RunMetrics]]]) -> Comparison:
    if len(named) < 2:
        raise ValueError("compare needs at least two metric sets")
    names, means, stds = [], [], []
    for name, metrics in named:
        m, s = summarize(metrics)
        names.append(name)
        means.append(m)
        stds.append(s)
    means_a = np.array(means)
    rewards = means_a[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = rewards[:, None] / rewards[None, :]
    return Comparison(names, means_a, np.array(stds), ratios)


def write_comparison(cmp: Comparison, prefix) -> list[Path]:
    prefix = Path(prefix)
    table = prefix.with_name(prefix.name + "_summary.csv")
    ratios = prefix.with_name(prefix.name + "_ratios.csv")
    plot = prefix.with_name(prefix.name + "_plot.dat")
    with open(table, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", *[f"{c}_{s}" for c in METRIC_COLUMNS for s in ("mean", "std")]])
        for k, name in enumerate(cmp.names):
            cells = []
            for j in range(len(METRIC_COLUMNS)):
                cells += [_fmt(cmp.means[k, j]), _fmt(cmp.stds[k, j])]
            w.writerow([name, *cells])
    with open(ratios, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", *cmp.names])
        for k, name in enumerate(cmp.names):
            w.writerow([name, *map(_fmt, cmp.ratios[k])])
    with open(plot, "w") as fh:
        fh.write("# metric policy_index policy mean std\n")
        for j, metric in enumerate(METRIC_COLUMNS):
            for k, name in enumerate(cmp.names):
                fh.write(f"{metric} {k} {name} {cmp.means[k, j]!r} {cmp.stds[k, j]!r}\n")
    return [table, ratios, plot]


def format_comparison(cmp: Comparison) -> str:
    width = max(len(n) for n in cmp.names) + 2
    lines = ["policy".ljust(width) + "".join(c.rjust(22) for c in METRIC_COLUMNS)]
    for k, name in enumerate(cmp.names):
        cells = "".join(f"{cmp.means[k, j]:>12.4f} ±{cmp.stds[k, j]:>8.4f}"
                        for j in range(len(METRIC_COLUMNS)))
        lines.append(name.ljust(width) + cells)
    lines.append("")
    lines.append("mean-reward ratios (row / column)")
    lines.append(" " * width + "".join(n.rjust(12) for n in cmp.names))
    for k, name in enumerate(cmp.names):
        lines.append(name.ljust(width) + "".join(
            (f"{r:12.4f}" if math.isfinite(r) else "nan".rjust(12)) for r in cmp.ratios[k]))
    return "\n".join(lines)

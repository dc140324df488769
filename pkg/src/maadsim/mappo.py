"""MAPPO with a shared actor and a centralized critic, written against NumPy.

Both networks are tanh MLPs stored as flat float64 vectors. Gradients are
computed by explicit backpropagation.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .env import OBS_DIM, EnvConfig, MultiAgentDrivingEnv
from .randomization import NONE, RandomizationLevel, sample_profiles
from .track import TrackMap

N_ACTIONS = 4
HIDDEN = (64, 64)


class NumericError(RuntimeError):
    """A loss or gradient became non-finite during an update."""


# -- networks --------------------------------------------------------------


@dataclass(frozen=True)
class NetworkSpec:
    input_dim: int
    output_dim: int
    hidden: tuple[int, ...] = HIDDEN

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim, *self.hidden, self.output_dim]

    @property
    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        out = []
        s = self.sizes
        for k in range(len(s) - 1):
            out += [(f"W{k}", (s[k], s[k + 1])), (f"b{k}", (s[k + 1],))]
        return out

    @property
    def n_params(self) -> int:
        return sum(math.prod(shape) for _, shape in self.layout)


class MLP:
    """tanh hidden layers, linear output. Parameters live in ``self.flat``."""

    def __init__(self, spec: NetworkSpec, flat: np.ndarray | None = None):
        self.spec = spec
        self.flat = np.zeros(spec.n_params) if flat is None else np.asarray(flat, dtype=np.float64)
        if self.flat.shape != (spec.n_params,):
            raise ValueError(f"expected {spec.n_params} parameters, got {self.flat.shape}")

    def unpack(self, flat: np.ndarray | None = None) -> list[np.ndarray]:
        flat = self.flat if flat is None else flat
        views, i = [], 0
        for _, shape in self.spec.layout:
            n = math.prod(shape)
            views.append(flat[i:i + n].reshape(shape))
            i += n
        return views

    def init_orthogonal(self, rng: np.random.Generator, out_gain: float) -> "MLP":
        views = self.unpack()
        n_layers = len(views) // 2
        for k in range(n_layers):
            w = views[2 * k]
            a = rng.standard_normal(w.shape)
            q, r = np.linalg.qr(a if w.shape[0] >= w.shape[1] else a.T)
            q = q * np.sign(np.diag(r))
            q = q if w.shape[0] >= w.shape[1] else q.T
            gain = out_gain if k == n_layers - 1 else math.sqrt(2.0)
            w[...] = gain * q
            views[2 * k + 1][...] = 0.0
        return self

    def forward(self, x: np.ndarray, flat: np.ndarray | None = None):
        """Returns (output, cache) for ``backward``."""
        views = self.unpack(flat)
        acts = [x]
        h = x
        n_layers = len(views) // 2
        for k in range(n_layers):
            z = h @ views[2 * k] + views[2 * k + 1]
            h = np.tanh(z) if k < n_layers - 1 else z
            acts.append(h)
        return h, acts

    def backward(self, acts: list[np.ndarray], dout: np.ndarray) -> np.ndarray:
        views = self.unpack()
        n_layers = len(views) // 2
        grads: list[np.ndarray] = [None] * len(views)  # type: ignore[list-item]
        delta = dout
        for k in reversed(range(n_layers)):
            grads[2 * k] = acts[k].T @ delta
            grads[2 * k + 1] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ views[2 * k].T) * (1.0 - acts[k] ** 2)
        return np.concatenate([g.ravel() for g in grads])


class RunningNorm:
    """Running mean/variance normalizer with clipping (parallel-update form)."""

    def __init__(self, dim: int, clip: float = 10.0):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.count = 0.0
        self.clip = clip

    def update(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=np.float64).reshape(-1, self.mean.size)
        n = x.shape[0]
        if n == 0:
            return
        b_mean, b_var = x.mean(axis=0), x.var(axis=0)
        total = self.count + n
        delta = b_mean - self.mean
        m2 = self.var * self.count + b_var * n + delta ** 2 * self.count * n / total
        self.mean = self.mean + delta * n / total
        self.var = m2 / total
        self.count = total

    def __call__(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.mean) / np.sqrt(self.var + 1e-8)
        return np.clip(z, -self.clip, self.clip)


def _check_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"non-finite {what}")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class Policy:
    """Shared actor, centralized critic and their input normalizers."""

    def __init__(self, obs_dim: int, state_dim: int):
        self.actor = MLP(NetworkSpec(obs_dim, N_ACTIONS))
        self.critic = MLP(NetworkSpec(state_dim, 1))
        self.obs_norm = RunningNorm(obs_dim)
        self.state_norm = RunningNorm(state_dim)

    @classmethod
    def initial(cls, obs_dim: int, state_dim: int, seed: int = 0) -> "Policy":
        p = cls(obs_dim, state_dim)
        rng = np.random.default_rng(seed)
        p.actor.init_orthogonal(rng, out_gain=0.01)
        p.critic.init_orthogonal(rng, out_gain=1.0)
        return p

    @property
    def obs_dim(self) -> int:
        return self.actor.spec.input_dim

    @property
    def state_dim(self) -> int:
        return self.critic.spec.input_dim

    def copy(self) -> "Policy":
        p = Policy(self.obs_dim, self.state_dim)
        p.actor.flat = self.actor.flat.copy()
        p.critic.flat = self.critic.flat.copy()
        for src, dst in ((self.obs_norm, p.obs_norm), (self.state_norm, p.state_norm)):
            dst.mean, dst.var, dst.count = src.mean.copy(), src.var.copy(), src.count
        return p

    def act(self, observations: np.ndarray, rng: np.random.Generator | None = None,
            greedy: bool = False):
        """Choose one action per row of raw observations.

        Returns (actions, log-probabilities, normalized observations).
        """
        obs_n = self.obs_norm(observations)
        logits = forward_actor_logits(self.actor, obs_n)
        logp = log_softmax(logits)
        if greedy:
            actions = logits.argmax(axis=1)
        else:
            u = rng.random(len(logits))
            cdf = np.cumsum(np.exp(logp), axis=1)
            actions = np.minimum((cdf < u[:, None]).sum(axis=1), N_ACTIONS - 1)
        return actions, logp[np.arange(len(actions)), actions], obs_n


def forward_actor_logits(actor: MLP, obs: np.ndarray, flat=None) -> np.ndarray:
    _check_finite(obs, "observation")
    return actor.forward(np.atleast_2d(obs), flat)[0]


def forward_actor(actor: MLP, obs: np.ndarray) -> np.ndarray:
    """Action probabilities, one row per observation."""
    return softmax(forward_actor_logits(actor, obs))


def forward_critic(critic: MLP, state: np.ndarray) -> np.ndarray:
    _check_finite(state, "global state")
    return critic.forward(np.atleast_2d(state))[0][:, 0]


# -- losses ----------------------------------------------------------------


def actor_loss_and_grad(actor: MLP, obs, actions, old_logp, adv, clip_eps, entropy_coef,
                        flat=None, need_grad=True):
    """Clipped surrogate plus entropy bonus; returns (loss, grad, stats)."""
    logits, acts = actor.forward(obs, flat)
    logp_all = log_softmax(logits)
    p = np.exp(logp_all)
    b = len(actions)
    rows = np.arange(b)
    logp = logp_all[rows, actions]
    ratio = np.exp(logp - old_logp)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    surr1, surr2 = ratio * adv, clipped * adv
    entropy = -(p * logp_all).sum(axis=1)
    loss = -np.minimum(surr1, surr2).mean() - entropy_coef * entropy.mean()
    stats = {"entropy": float(entropy.mean()),
             "clip_frac": float(np.mean(np.abs(ratio - 1.0) > clip_eps))}
    if not need_grad:
        return float(loss), None, stats
    # d(min)/d(logp): the unclipped branch carries the gradient when it is the minimum
    g = np.where(surr1 <= surr2, surr1, 0.0)
    dlogits = -(g / b)[:, None] * (np.eye(N_ACTIONS)[actions] - p)
    dlogits += (entropy_coef / b) * p * (logp_all + entropy[:, None])
    return float(loss), actor.backward(acts, dlogits), stats


def critic_loss_and_grad(critic: MLP, states, returns, value_coef, flat=None, need_grad=True):
    out, acts = critic.forward(states, flat)
    err = out[:, 0] - returns
    loss = value_coef * np.mean(err ** 2)
    if not need_grad:
        return float(loss), None
    dout = (2.0 * value_coef / len(err)) * err[:, None]
    return float(loss), critic.backward(acts, dout)


def clip_grad_norm(g: np.ndarray, max_norm: float) -> np.ndarray:
    norm = float(np.linalg.norm(g))
    return g * (max_norm / norm) if norm > max_norm else g


class Adam:
    def __init__(self, n: int, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, betas[0], betas[1], eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad * grad
        m_hat = self.m / (1 - self.b1 ** self.t)
        v_hat = self.v / (1 - self.b2 ** self.t)
        params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# -- advantage estimation --------------------------------------------------


def compute_gae(rewards, values, bootstrap_value, gamma, lam):
    """Generalized advantage estimates along the leading (time) axis."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if rewards.shape != values.shape:
        raise ValueError("rewards and values must have the same shape")
    adv = np.zeros_like(rewards)
    next_value = np.asarray(bootstrap_value, dtype=np.float64) * np.ones_like(rewards[0])
    running = np.zeros_like(rewards[0])
    for t in reversed(range(len(rewards))):
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + 1e-8)


# -- rollouts --------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 2000
    steps_per_episode: int = 400
    lr_actor: float = 5e-4
    lr_critic: float = 5e-4
    ppo_epochs: int = 15
    entropy_coef: float = 0.01
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    value_coef: float = 0.5
    minibatches: int = 4
    max_grad_norm: float = 10.0
    episodes_per_update: int = 4

    def __post_init__(self):
        if self.episodes < 0 or self.steps_per_episode < 1:
            raise ValueError("episodes must be >= 0 and steps_per_episode >= 1")
        for name in ("lr_actor", "lr_critic", "ppo_epochs", "gamma", "gae_lambda",
                     "value_coef", "minibatches", "max_grad_norm", "episodes_per_update"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.clip_eps < 1:
            raise ValueError("clip_eps must lie in (0, 1)")
        if self.entropy_coef < 0:
            raise ValueError("entropy_coef must be non-negative")


@dataclass
class RolloutBuffer:
    """Trajectories shaped (episode, step, agent, ...)."""

    obs: np.ndarray  # normalized actor inputs
    raw_obs: np.ndarray
    states: np.ndarray  # normalized critic inputs
    raw_states: np.ndarray
    actions: np.ndarray
    logp: np.ndarray
    values: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return int(np.prod(self.actions.shape))

    def finish(self, gamma: float, lam: float) -> None:
        adv = np.empty_like(self.rewards)
        ret = np.empty_like(self.rewards)
        for e in range(self.rewards.shape[0]):
            if not self.dones[e, -1]:
                raise ValueError("advantages need complete episodes")
            adv[e], ret[e] = compute_gae(self.rewards[e], self.values[e], 0.0, gamma, lam)
        self.advantages, self.returns = adv, ret

    def episode_returns(self) -> np.ndarray:
        """Mean over agents of each episode's summed reward."""
        return self.rewards.sum(axis=1).mean(axis=1)

    @classmethod
    def concat(cls, parts: Sequence["RolloutBuffer"]) -> "RolloutBuffer":
        names = [f.name for f in cls.__dataclass_fields__.values()]
        merged = {}
        for n in names:
            vals = [getattr(p, n) for p in parts]
            merged[n] = None if any(v is None for v in vals) else np.concatenate(vals)
        return cls(**merged)


def episode_seed(base_seed: int, episode: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base_seed, episode])


def run_episode(env: MultiAgentDrivingEnv, policy: Policy, profiles, seed: int,
                action_rng: np.random.Generator | None, greedy: bool):
    """Roll one episode; returns per-step arrays (obs_n, raw_obs, states, actions, logp, rewards)."""
    res = env.reset(profiles, seed=seed)
    T = env.config.max_steps
    n = env.n_agents
    obs_n = np.empty((T, n, policy.obs_dim))
    raw = np.empty((T, n, policy.obs_dim))
    states = np.empty((T, n, policy.state_dim))
    actions = np.empty((T, n), dtype=np.int64)
    logp = np.empty((T, n))
    rewards = np.empty((T, n))
    for t in range(T):
        raw[t], states[t] = res.observations, res.states
        actions[t], logp[t], obs_n[t] = policy.act(res.observations, action_rng, greedy)
        res = env.step(actions[t])
        rewards[t] = res.rewards
    return obs_n, raw, states, actions, logp, rewards


def _collect_episode(args):
    env_config, track, policy, level, base_seed, episode, greedy = args
    ss_env, ss_dr, ss_act = episode_seed(base_seed, episode).spawn(3)
    env = MultiAgentDrivingEnv(env_config, track)
    profiles = sample_profiles(level, np.random.default_rng(ss_dr), env_config.n_agents)
    env_seed = int(ss_env.generate_state(1)[0])
    return run_episode(env, policy, profiles, env_seed, np.random.default_rng(ss_act), greedy)


def collect_rollouts(env_config: EnvConfig, policy: Policy, level: RandomizationLevel,
                     n_episodes: int, seed: int = 0, start_episode: int = 0,
                     track: TrackMap | None = None, greedy: bool = False,
                     workers: int = 1) -> RolloutBuffer:
    """Collect ``n_episodes`` with frozen parameters.

    Episode ``k`` is seeded from ``(seed, start_episode + k)`` alone, so the
    buffer is identical for any worker count.
    """
    jobs = [(env_config, track, policy, level, seed, start_episode + k, greedy)
            for k in range(n_episodes)]
    if workers > 1 and n_episodes > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_collect_episode, jobs))
    else:
        results = [_collect_episode(j) for j in jobs]
    obs_n, raw, states_raw, actions, logp, rewards = (np.stack(x) for x in zip(*results))
    states = policy.state_norm(states_raw)
    values = forward_critic(policy.critic, states.reshape(-1, policy.state_dim)).reshape(
        actions.shape)
    dones = np.zeros(actions.shape[:2], dtype=bool)
    dones[:, -1] = True
    return RolloutBuffer(obs_n, raw, states, states_raw, actions, logp, values, rewards, dones)


# -- update ----------------------------------------------------------------


@dataclass
class Trainer:
    policy: Policy
    config: TrainConfig
    seed: int = 0
    actor_opt: Adam = field(init=False)
    critic_opt: Adam = field(init=False)

    def __post_init__(self):
        self.actor_opt = Adam(self.policy.actor.flat.size, self.config.lr_actor)
        self.critic_opt = Adam(self.policy.critic.flat.size, self.config.lr_critic)
        self.rng = np.random.default_rng([self.seed, 0x5EED])

    def update(self, buf: RolloutBuffer) -> dict:
        return ppo_update(self.policy, buf, self.config, self.actor_opt, self.critic_opt, self.rng)


def ppo_update(policy: Policy, buf: RolloutBuffer, cfg: TrainConfig, actor_opt: Adam,
               critic_opt: Adam, rng: np.random.Generator) -> dict:
    """Run ``ppo_epochs`` passes of shuffled minibatch updates on both networks.

    On a non-finite loss the parameters and optimizer state are restored and
    ``NumericError`` is raised.
    """
    if buf.advantages is None:
        buf.finish(cfg.gamma, cfg.gae_lambda)
    obs = buf.obs.reshape(-1, policy.obs_dim)
    states = buf.states.reshape(-1, policy.state_dim)
    actions = buf.actions.ravel()
    old_logp = buf.logp.ravel()
    returns = buf.returns.ravel()
    adv = normalize_advantages(buf.advantages.ravel())

    snapshot = (policy.actor.flat.copy(), policy.critic.flat.copy(),
                (actor_opt.m.copy(), actor_opt.v.copy(), actor_opt.t),
                (critic_opt.m.copy(), critic_opt.v.copy(), critic_opt.t))
    n = len(actions)
    stats = {"actor_loss": [], "critic_loss": [], "entropy": [], "clip_frac": []}
    for epoch in range(cfg.ppo_epochs):
        perm = rng.permutation(n)
        for idx in np.array_split(perm, cfg.minibatches):
            # non-finite values are caught just below
            with np.errstate(invalid="ignore", over="ignore"):
                a_loss, a_grad, a_stats = actor_loss_and_grad(
                    policy.actor, obs[idx], actions[idx], old_logp[idx], adv[idx],
                    cfg.clip_eps, cfg.entropy_coef)
                c_loss, c_grad = critic_loss_and_grad(policy.critic, states[idx],
                                                      returns[idx], cfg.value_coef)
            if not (math.isfinite(a_loss) and math.isfinite(c_loss)
                    and np.all(np.isfinite(a_grad)) and np.all(np.isfinite(c_grad))):
                policy.actor.flat[:], policy.critic.flat[:] = snapshot[0], snapshot[1]
                actor_opt.m, actor_opt.v, actor_opt.t = snapshot[2]
                critic_opt.m, critic_opt.v, critic_opt.t = snapshot[3]
                raise NumericError(
                    f"non-finite loss at epoch {epoch}: actor={a_loss} critic={c_loss} "
                    f"max|adv|={np.abs(adv).max():.3g} max|return|={np.abs(returns).max():.3g}")
            actor_opt.step(policy.actor.flat, clip_grad_norm(a_grad, cfg.max_grad_norm))
            critic_opt.step(policy.critic.flat, clip_grad_norm(c_grad, cfg.max_grad_norm))
            stats["actor_loss"].append(a_loss)
            stats["critic_loss"].append(c_loss)
            stats["entropy"].append(a_stats["entropy"])
            stats["clip_frac"].append(a_stats["clip_frac"])
    return {k: float(np.mean(v)) for k, v in stats.items()}


# -- training loop ---------------------------------------------------------

LOG_COLUMNS = ("update", "episode", "mean_reward", "actor_loss", "critic_loss", "entropy")


def train(env_config: EnvConfig, level: RandomizationLevel = NONE,
          config: TrainConfig | None = None, seed: int = 0, track: TrackMap | None = None,
          workers: int = 1, on_update: Callable[[dict], None] | None = None):
    """Train a shared policy; returns (policy, log rows)."""
    config = config or TrainConfig()
    if config.steps_per_episode != env_config.max_steps:
        env_config = EnvConfig(**{**_shallow(env_config), "max_steps": config.steps_per_episode})
    policy = Policy.initial(OBS_DIM, env_config.state_dim, seed)
    trainer = Trainer(policy, config, seed)
    rows = []
    episode = 0
    update = 0
    while episode < config.episodes:
        n = min(config.episodes_per_update, config.episodes - episode)
        buf = collect_rollouts(env_config, policy, level, n, seed, episode, track,
                               workers=workers)
        stats = trainer.update(buf)
        policy.obs_norm.update(buf.raw_obs)
        policy.state_norm.update(buf.raw_states)
        episode += n
        update += 1
        row = {"update": update, "episode": episode,
               "mean_reward": float(buf.episode_returns().mean()),
               "actor_loss": stats["actor_loss"], "critic_loss": stats["critic_loss"],
               "entropy": stats["entropy"]}
        rows.append(row)
        if on_update:
            on_update(row)
    return policy, rows


def _shallow(dc) -> dict:
    return {f: getattr(dc, f) for f in dc.__dataclass_fields__}


def write_log(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in LOG_COLUMNS])


def evaluate_returns(policy: Policy, env_config: EnvConfig, runs: int, seed: int = 0,
                     track: TrackMap | None = None) -> np.ndarray:
    """Greedy per-run returns (mean over agents) on the nominal simulator."""
    buf = collect_rollouts(env_config, policy, NONE, runs, seed, 0, track, greedy=True)
    return buf.episode_returns()


# -- checkpoints -----------------------------------------------------------

MAGIC = b"MAADCKPT"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    code = 10


class CheckpointVersionError(CheckpointError):
    code = 11


class CorruptCheckpointError(CheckpointError):
    code = 12


class DimensionMismatchError(CheckpointError):
    code = 13


def _checkpoint_arrays(p: Policy) -> list[tuple[str, np.ndarray]]:
    return [
        ("actor", p.actor.flat),
        ("critic", p.critic.flat),
        ("obs_mean", p.obs_norm.mean),
        ("obs_var", p.obs_norm.var),
        ("obs_count", np.array([p.obs_norm.count])),
        ("state_mean", p.state_norm.mean),
        ("state_var", p.state_norm.var),
        ("state_count", np.array([p.state_norm.count])),
    ]


def save_checkpoint(policy: Policy, path) -> None:
    """Magic, version, JSON layout descriptor, then little-endian float64 payload."""
    arrays = _checkpoint_arrays(policy)
    descriptor = {
        "obs_dim": policy.obs_dim,
        "state_dim": policy.state_dim,
        "hidden": list(HIDDEN),
        "n_actions": N_ACTIONS,
        "actor_layout": [[n, list(s)] for n, s in policy.actor.spec.layout],
        "critic_layout": [[n, list(s)] for n, s in policy.critic.spec.layout],
        "blocks": [[name, int(a.size)] for name, a in arrays],
    }
    head = json.dumps(descriptor, sort_keys=True).encode()
    payload = np.concatenate([a.ravel() for _, a in arrays]).astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", FORMAT_VERSION, len(head)) + head + payload)


def load_checkpoint(path, obs_dim: int | None = None, state_dim: int | None = None) -> Policy:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 8 or not data.startswith(MAGIC):
        raise CorruptCheckpointError(f"{path}: not a checkpoint file")
    version, head_len = struct.unpack_from("<II", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    start = len(MAGIC) + 8
    try:
        desc = json.loads(data[start:start + head_len].decode())
        blocks = desc["blocks"]
        ckpt_obs, ckpt_state = int(desc["obs_dim"]), int(desc["state_dim"])
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise CorruptCheckpointError(f"{path}: bad descriptor ({exc})") from None
    total = sum(n for _, n in blocks)
    payload = data[start + head_len:]
    if len(payload) != 8 * total:
        raise CorruptCheckpointError(f"{path}: payload has {len(payload)} bytes, expected {8 * total}")
    if (obs_dim is not None and obs_dim != ckpt_obs) or (
            state_dim is not None and state_dim != ckpt_state):
        raise DimensionMismatchError(
            f"{path}: checkpoint dims obs={ckpt_obs} state={ckpt_state}, "
            f"environment obs={obs_dim} state={state_dim}")
    policy = Policy(ckpt_obs, ckpt_state)
    expected = _checkpoint_arrays(policy)
    if [[n, int(a.size)] for n, a in expected] != blocks or desc.get("hidden") != list(HIDDEN):
        raise CorruptCheckpointError(f"{path}: layout does not match network architecture")
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    parts, i = {}, 0
    for name, size in blocks:
        parts[name] = flat[i:i + size].copy()
        i += size
    policy.actor.flat = parts["actor"]
    policy.critic.flat = parts["critic"]
    policy.obs_norm.mean, policy.obs_norm.var = parts["obs_mean"], parts["obs_var"]
    policy.obs_norm.count = float(parts["obs_count"][0])
    policy.state_norm.mean, policy.state_norm.var = parts["state_mean"], parts["state_var"]
    policy.state_norm.count = float(parts["state_count"][0])
    return policy


def train_config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)

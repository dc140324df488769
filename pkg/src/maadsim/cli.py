"""Command-line entry points: train, eval, baseline-eval, compare.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .baseline import RssParams, RuleBasedPolicy
from .config import Config, ConfigError, load_config
from .env import OBS_DIM, EnvConfig
from .harness import (
    MetricsParseError,
    compare,
    evaluate,
    format_comparison,
    greedy_policy_fn,
    load_pseudo_real,
    read_metrics,
    summarize,
    write_comparison,
    write_metrics,
)
from .mappo import (
    CheckpointError,
    NumericError,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train,
    write_log,
)
from .randomization import resolve_level
from .track import TrackMap
from .vehicle import VehicleParams

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _settings(path: str | None):
    cfg = load_config(path) if path else Config()
    vehicle = cfg.build(VehicleParams)
    env_config = cfg.build(EnvConfig, vehicle=vehicle)
    track = TrackMap.read(cfg.values["track"][0]) if "track" in cfg.values else None
    return cfg, env_config, track


def cmd_train(args) -> int:
    cfg, env_config, track = _settings(args.config)
    try:
        level = resolve_level(args.level)
    except FileNotFoundError:
        raise UsageError(f"unknown randomization level {args.level!r}") from None
    overrides = {"steps_per_episode": env_config.max_steps}
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    train_config = cfg.build(TrainConfig, **overrides)

    def progress(row):
        if not args.quiet:
            print(f"update {row['update']:4d}  episode {row['episode']:5d}  "
                  f"mean_reward {row['mean_reward']:9.3f}  entropy {row['entropy']:.3f}",
                  file=sys.stderr)

    policy, rows = train(env_config, level, train_config, seed=args.seed, track=track,
                         workers=args.workers, on_update=progress)
    out = Path(args.out)
    save_checkpoint(policy, out)
    log_path = Path(args.log) if args.log else out.with_name(out.name + ".log.csv")
    write_log(rows, log_path)
    final = rows[-1]["mean_reward"] if rows else float("nan")
    print(f"final mean reward {final:.4f}")
    return EXIT_OK


def _policy_fn(spec: str, env_config: EnvConfig, cfg: Config):
    if spec == "rule-based":
        return RuleBasedPolicy(cfg.build(RssParams))
    policy = load_checkpoint(spec, obs_dim=OBS_DIM, state_dim=env_config.state_dim)
    return greedy_policy_fn(policy)


def cmd_eval(args) -> int:
    cfg, env_config, track = _settings(args.config)
    policy_fn = _policy_fn(args.policy, env_config, cfg)
    profile = load_pseudo_real(args.pseudo_real) if args.pseudo_real else None
    metrics = evaluate(policy_fn, env_config, args.runs, args.seed, profile, track,
                       log_dir=args.log_dir)
    write_metrics(metrics, args.out)
    mean, _ = summarize(metrics)
    print(f"{args.policy}: mean reward {mean[0]:.4f} over {args.runs} runs")
    return EXIT_OK


def cmd_compare(args) -> int:
    if len(args.files) < 2:
        raise UsageError("compare needs at least two metric files")
    named = [(Path(f).stem, read_metrics(f)) for f in args.files]
    cmp = compare(named)
    paths = write_comparison(cmp, args.out)
    print(format_comparison(cmp))
    print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="maadsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="key-value config file")
        sp.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train", help="train a shared MAPPO policy")
    common(t)
    t.add_argument("--level", default="none", help="none, med, high or a level file")
    t.add_argument("--episodes", type=int, help="override the configured episode count")
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--log", help="training log CSV (default: <out>.log.csv)")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=cmd_train)

    for name, policy_default in (("eval", None), ("baseline-eval", "rule-based")):
        e = sub.add_parser(name, help="evaluate a policy over seeded runs")
        common(e)
        if policy_default is None:
            e.add_argument("--policy", required=True, help="checkpoint path or 'rule-based'")
        else:
            e.set_defaults(policy=policy_default)
        e.add_argument("--runs", type=int, default=30)
        e.add_argument("--pseudo-real", help="pseudo-real profile file or 'default'")
        e.add_argument("--log-dir", help="write per-run episode logs here")
        e.add_argument("--out", required=True, help="metrics CSV path")
        e.set_defaults(func=cmd_eval)

    c = sub.add_parser("compare", help="compare metric CSVs")
    c.add_argument("files", nargs="+")
    c.add_argument("--out", required=True, help="output prefix")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, MetricsParseError, CheckpointError) as exc:
        print(f"maadsim: {exc}", file=sys.stderr)
        if isinstance(exc, (MetricsParseError, CheckpointError)):
            return EXIT_IO
        return EXIT_USAGE
    except OSError as exc:
        print(f"maadsim: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericError, FloatingPointError) as exc:
        print(f"maadsim: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

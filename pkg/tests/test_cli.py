import numpy as np
import pytest

from maadsim import cli
from maadsim.env import OBS_DIM
from maadsim.mappo import NumericError, Policy, load_checkpoint

TINY = "max_steps 20\nepisodes_per_update 2\nppo_epochs 2\n"


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.txt"
    path.write_text(TINY)
    return str(path)


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_train_writes_checkpoint_and_log(tmp_path, tiny_config, capsys):
    out = tmp_path / "p.ckpt"
    assert run("train", "--config", tiny_config, "--level", "med", "--episodes", 4,
               "--out", out, "--quiet") == 0
    assert "final mean reward" in capsys.readouterr().out
    lines = (tmp_path / "p.ckpt.log.csv").read_text().splitlines()
    assert lines[0] == "update,episode,mean_reward,actor_loss,critic_loss,entropy"
    assert len(lines) == 3
    assert load_checkpoint(out).obs_dim == OBS_DIM


def test_train_zero_episodes(tmp_path, tiny_config):
    out = tmp_path / "p.ckpt"
    log = tmp_path / "log.csv"
    assert run("train", "--config", tiny_config, "--episodes", 0, "--out", out,
               "--log", log, "--quiet", "--seed", 3) == 0
    assert len(log.read_text().splitlines()) == 1
    np.testing.assert_array_equal(load_checkpoint(out).actor.flat,
                                  Policy.initial(OBS_DIM, 39, 3).actor.flat)


def test_train_is_deterministic(tmp_path, tiny_config):
    for name in ("a", "b"):
        assert run("train", "--config", tiny_config, "--episodes", 2, "--seed", 5,
                   "--out", tmp_path / f"{name}.ckpt", "--quiet") == 0
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    assert ((tmp_path / "a.ckpt.log.csv").read_bytes()
            == (tmp_path / "b.ckpt.log.csv").read_bytes())


def test_eval_and_compare_deterministic(tmp_path, tiny_config):
    ckpt = tmp_path / "p.ckpt"
    run("train", "--config", tiny_config, "--episodes", 2, "--out", ckpt, "--quiet")
    outs = []
    for k in range(2):
        d = tmp_path / f"round{k}"
        d.mkdir()
        learned, rule = d / "learned.csv", d / "rule.csv"
        assert run("eval", "--config", tiny_config, "--policy", ckpt, "--runs", 3,
                   "--pseudo-real", "default", "--seed", 2, "--out", learned) == 0
        assert run("baseline-eval", "--config", tiny_config, "--runs", 3,
                   "--pseudo-real", "default", "--seed", 2, "--out", rule) == 0
        assert run("compare", learned, rule, "--out", d / "cmp") == 0
        outs.append([(d / name).read_bytes() for name in (
            "learned.csv", "rule.csv", "cmp_summary.csv", "cmp_ratios.csv", "cmp_plot.dat")])
    assert outs[0] == outs[1]
    assert len((tmp_path / "round0" / "rule.csv").read_text().splitlines()) == 1 + 3 + 2


def test_eval_writes_run_logs(tmp_path, tiny_config):
    assert run("baseline-eval", "--config", tiny_config, "--runs", 2, "--log-dir",
               tmp_path / "logs", "--out", tmp_path / "m.csv") == 0
    assert sorted(p.name for p in (tmp_path / "logs").iterdir()) == ["run_000.csv", "run_001.csv"]


def test_usage_errors(tmp_path, tiny_config, capsys):
    assert run("train", "--level", "extreme", "--out", tmp_path / "x", "--config",
               tiny_config) == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        run("train")
    assert exc.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        run("bogus")
    assert exc.value.code == cli.EXIT_USAGE
    bad = tmp_path / "bad.txt"
    bad.write_text("max_steps many\n")
    assert run("baseline-eval", "--config", bad, "--out", tmp_path / "m.csv") == cli.EXIT_USAGE
    assert run("compare", tmp_path / "only.csv", "--out", tmp_path / "c") == cli.EXIT_USAGE


def test_io_errors(tmp_path, tiny_config):
    assert run("baseline-eval", "--config", tmp_path / "missing.txt",
               "--out", tmp_path / "m.csv") == cli.EXIT_IO
    assert run("eval", "--config", tiny_config, "--policy", tmp_path / "none.ckpt",
               "--out", tmp_path / "m.csv") == cli.EXIT_IO
    junk = tmp_path / "junk.ckpt"
    junk.write_bytes(b"not a checkpoint")
    assert run("eval", "--config", tiny_config, "--policy", junk,
               "--out", tmp_path / "m.csv") == cli.EXIT_IO
    assert run("train", "--config", tiny_config, "--episodes", 0, "--quiet",
               "--out", tmp_path / "no" / "dir" / "p.ckpt") == cli.EXIT_IO
    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("run,mean_reward\n")
    assert run("compare", bad_csv, bad_csv, "--out", tmp_path / "c") == cli.EXIT_IO


def test_dimension_mismatch_exit(tmp_path, tiny_config):
    ckpt = tmp_path / "p.ckpt"
    run("train", "--config", tiny_config, "--episodes", 0, "--out", ckpt, "--quiet")
    two = tmp_path / "two.txt"
    two.write_text(TINY + "n_agents 2\nv_max 0.3 0.4\n")
    assert run("eval", "--config", two, "--policy", ckpt, "--out", tmp_path / "m.csv") == cli.EXIT_IO


def test_numeric_failure_exit(tmp_path, tiny_config, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericError("loss is nan")

    monkeypatch.setattr(cli, "train", boom)
    assert run("train", "--config", tiny_config, "--out", tmp_path / "p.ckpt") == cli.EXIT_NUMERIC


def test_custom_level_file(tmp_path, tiny_config):
    level = tmp_path / "level.txt"
    level.write_text("gain uniform 0.9 1.1\n")
    assert run("train", "--config", tiny_config, "--level", level, "--episodes", 2,
               "--out", tmp_path / "p.ckpt", "--quiet") == 0

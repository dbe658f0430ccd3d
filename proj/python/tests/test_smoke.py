import math

import pytest

import mikt


def test_envs_listed_with_dims():
    envs = mikt.list_envs()
    assert "crawler-2" in envs and "crawler-4" in envs
    assert mikt.env_dims("crawler-4") == (9, 4)
    with pytest.raises(mikt.UnknownEnvError):
        mikt.env_dims("crawler-42")


def test_env_episode_runs_to_horizon():
    env = mikt.Env("crawler-2", seed=3)
    obs = env.reset()
    assert len(obs) == env.state_dim == 5
    steps, done = 0, False
    while not done:
        obs, reward, done = env.step([0.1] * env.action_dim)
        assert math.isfinite(reward)
        steps += 1
    assert steps == env.horizon


def test_gae_matches_hand_computation():
    adv, targets = mikt.gae([1.0, 1.0], [0.0, 0.0], 0.0, 0.5, 1.0)
    assert adv == pytest.approx([1.5, 1.0])
    assert targets == pytest.approx([1.5, 1.0])


def test_config_is_strict():
    cfg = mikt.default_config()
    assert cfg["minibatch_size"] == 64
    with pytest.raises(mikt.ConfigError):
        mikt.train({"sead": 1}, "unused")


def test_tiny_training_run(tmp_path):
    cfg = {
        "algorithm": "vpg",
        "env": "crawler-1",
        "total_steps": 512,
        "steps_per_iteration": 256,
        "epochs": 1,
        "hidden_units": 8,
    }
    summary = mikt.train(cfg, tmp_path / "run")
    rows = mikt.read_metrics(tmp_path / "run" / "metrics.csv")
    assert [r["env_steps"] for r in rows] == [256, 512]
    assert summary["final_return"] == pytest.approx(sum(r["ret_mean"] for r in rows) / 2)
    assert summary["final_p_mean"] == 0.0


def test_cli_in_process(tmp_path):
    code, out, _ = mikt.cli(["list-envs"])
    assert code == 0
    assert "crawler-3: 7/3" in out
    code, _, err = mikt.cli(["train", "--algo", "mikt", "--teacher", "/nonexistent.ckpt", "--out", str(tmp_path / "x")])
    assert code == 1 and "teacher" in err

"""Worker loops and orchestration: accounting, purity, modes, determinism."""

import math

import numpy as np
import pytest

from refreshrl.config import parse_config
from refreshrl.envs import RIGHT, ChainWorld
from refreshrl.net import zero_params
from refreshrl.replay import Experience
from refreshrl.runlog import read_csv
from refreshrl.transform import TBConfig, tb_returns
from refreshrl.workers import (ActorWorker, RefresherWorker, build_context,
                               orchestrate)


def make_cfg(mode="baseline", **over):
    overrides = {"mode": mode, "env": "chain", "chain_n": "5", "scale": "100",
                 "total_steps": "2000", "eval_interval": "500",
                 "eval_episodes": "3", "checkpoint_interval": "1000"}
    overrides.update({k: str(v) for k, v in over.items()})
    return parse_config(None, overrides=overrides)


def always_right_params(n=5):
    params = zero_params(n, 2)
    params.arrays["bp"][:] = [0.0, 5.0]
    return params


# ---------------------------------------------------------------- refresher


def seeded_refresher(mode="lider", g_stored=0.0, greedy=True):
    cfg = make_cfg(mode=mode, refresher_greedy=greedy)
    ctx = build_context(cfg, rundir=None)
    env = ChainWorld(5)
    env.reset()
    env.step(RIGHT)
    env.step(RIGHT)  # now at cell 2 with 2 steps used
    exp = Experience(features=env.snapshot() and np.eye(5)[2], action=RIGHT,
                     g_return=g_stored, snapshot=env.snapshot())
    ctx.buffer_d.push(exp, 0.5)
    worker = RefresherWorker(ctx, ChainWorld(5), np.random.default_rng(0),
                             frozen_policy=always_right_params())
    return ctx, worker


def test_refresher_success_stores_trajectory_and_journal():
    ctx, worker = seeded_refresher(g_stored=0.0)
    worker.iterate()
    want_gnew = tb_returns([0.0, 1.0], TBConfig(epsilon=0.01, gamma=0.99))[0]
    assert want_gnew == pytest.approx(0.4205735979665884, abs=1e-12)
    assert worker.rollouts == 1
    assert worker.steps_taken == 2  # cell 2 -> 3 -> goal
    assert ctx.clock.t == 2
    assert len(ctx.buffer_r) == 2  # both rollout steps stored
    assert len(ctx.journal) == 1
    event = ctx.journal[0]
    assert event.satisfied and event.gnew == pytest.approx(want_gnew, abs=1e-12)
    assert ctx.collector.lifetime_refresh.successes == 1
    # the drawn entry was flagged
    assert all(e.refreshed for e in ctx.buffer_d.live_entries())


def test_refresher_failure_stores_nothing_in_lider_mode():
    ctx, worker = seeded_refresher(g_stored=10.0)  # unbeatable stored return
    worker.iterate()
    assert worker.rollouts == 1
    assert len(ctx.buffer_r) == 0
    assert len(ctx.journal) == 0
    assert ctx.collector.lifetime_refresh.successes == 0
    assert ctx.collector.lifetime_refresh.rollouts == 1


def test_refresher_addall_stores_despite_failure():
    ctx, worker = seeded_refresher(mode="lider_addall", g_stored=10.0)
    worker.iterate()
    assert len(ctx.buffer_r) == 2  # stored anyway
    assert len(ctx.journal) == 1
    assert not ctx.journal[0].satisfied  # condition recorded, not enforced
    assert ctx.collector.lifetime_refresh.successes == 0


def test_refresher_equal_returns_do_not_store():
    ctx, worker = seeded_refresher(g_stored=0.4205735979665884)
    worker.iterate()
    assert len(ctx.buffer_r) == 0  # strict inequality
    assert len(ctx.journal) == 0


def test_refresher_idles_on_empty_buffer():
    cfg = make_cfg(mode="lider")
    ctx = build_context(cfg, rundir=None)
    worker = RefresherWorker(ctx, ChainWorld(5), np.random.default_rng(0))
    worker.iterate()
    assert worker.rollouts == 0
    assert ctx.clock.t == 0


# ---------------------------------------------------------------- actor


def test_actor_segments_match_episode_lengths():
    cfg = make_cfg(chain_n=13, total_steps=100000)
    ctx = build_context(cfg, rundir=None)
    actor = ActorWorker(0, ctx, ChainWorld(13), np.random.default_rng(1))
    iterates = 0
    while actor.episodes < 6:
        actor.iterate()
        iterates += 1
    # one gradient apply per iterate, <= t_max env steps per iterate
    assert ctx.store.version == iterates
    assert actor.steps_taken <= iterates * cfg.t_max
    # episodes are pushed whole at terminal, one buffer entry per step
    assert len(ctx.buffer_d) == actor.steps_taken - len(actor._ep_rewards)
    # cap-length episodes (52 steps at n=13) need ceil(52/20) = 3 segments,
    # and in general a k-step episode contributes ceil(k / t_max) iterates
    assert iterates >= -(-actor.steps_taken // cfg.t_max)


def test_actor_pushes_tb_returns_for_terminal_episode():
    cfg = make_cfg(chain_n=4, total_steps=10, gamma=1.0, tb_epsilon=0.0)
    ctx = build_context(cfg, rundir=None)
    actor = ActorWorker(0, ctx, ChainWorld(4), np.random.default_rng(0))
    # hand-fill a finished [0, 0, 1] episode and push it
    actor._ep_states = [np.eye(4)[0], np.eye(4)[1], np.eye(4)[2]]
    actor._ep_actions = [RIGHT, RIGHT, RIGHT]
    actor._ep_rewards = [0.0, 0.0, 1.0]
    actor._ep_snaps = [None, None, None]
    actor._push_episode(ctx.store.sync())
    entries = ctx.buffer_d.live_entries()
    assert len(entries) == 3
    h1 = math.sqrt(2.0) - 1.0
    for e in entries:
        assert e.g_return == pytest.approx(h1, abs=1e-12)
        assert not e.refreshed


# ---------------------------------------------------------------- runs


def test_baseline_run_accounting_and_isolation(tmp_path):
    cfg = make_cfg("baseline", seed=3)
    res = orchestrate(cfg, tmp_path / "run")
    assert res.final_step >= cfg.total_steps
    assert res.final_step == sum(res.actor_steps)  # no refresher steps
    assert res.refresher_steps == 0
    assert not res.r_constructed
    assert res.sil_r_sourced == 0  # every SIL sample D-sourced
    assert res.sil_updates > 0
    assert res.journal == []


def test_lider_run_purity_and_accounting(tmp_path):
    cfg = make_cfg("lider", seed=4)
    res = orchestrate(cfg, tmp_path / "run")
    assert res.final_step == sum(res.actor_steps) + res.refresher_steps
    assert res.refresher_steps > 0
    assert res.r_constructed
    assert res.refresh_rollouts > 0
    for event in res.journal:  # R-purity: strict improvement on every insertion
        assert event.satisfied and event.gnew > event.g_sampled


def test_run_emits_wellformed_logs(tmp_path):
    cfg = make_cfg("lider", seed=5)
    res = orchestrate(cfg, tmp_path / "run")
    eval_rows = read_csv(res.run_dir / "eval.csv")
    metrics_rows = read_csv(res.run_dir / "metrics.csv")
    train_rows = read_csv(res.run_dir / "train.csv")
    assert eval_rows and metrics_rows and train_rows
    boundaries = sorted({r["global_step"] for r in eval_rows})
    assert boundaries == [500, 1000, 1500, 2000]
    assert {r["global_step"] for r in metrics_rows} == set(boundaries)
    for r in eval_rows:
        assert r["mode"] == "lider"
        assert r["episodic_reward"] is not None
    assert (res.run_dir / "checkpoints" / "final.ckpt").exists()
    assert (res.run_dir / "checkpoints" / "step_1000.ckpt").exists()
    assert (res.run_dir / "final_summary.txt").exists()
    assert parse_config(res.run_dir / "config.txt") == cfg  # echo round-trips


def test_deterministic_mode_is_byte_reproducible(tmp_path):
    cfg = make_cfg("lider", seed=6)
    a = orchestrate(cfg, tmp_path / "a")
    b = orchestrate(make_cfg("lider", seed=6), tmp_path / "b")
    assert (a.run_dir / "eval.csv").read_bytes() == (b.run_dir / "eval.csv").read_bytes()
    assert (a.run_dir / "metrics.csv").read_bytes() == (b.run_dir / "metrics.csv").read_bytes()
    assert a.final_step == b.final_step
    assert a.actor_steps == b.actor_steps


def test_onebuffer_mode_single_double_buffer(tmp_path):
    cfg = make_cfg("lider_onebuffer", seed=7)
    res = orchestrate(cfg, tmp_path / "run")
    assert res.d_capacity == 200_000
    assert not res.r_constructed
    assert res.refresher_steps > 0  # refresher still runs, pushing into D


def test_sampler_mode_never_draws_from_d(tmp_path):
    cfg = make_cfg("lider_sampler", seed=8)
    res = orchestrate(cfg, tmp_path / "run")
    assert res.sil_d_sourced == 0
    assert res.sil_r_sourced > 0  # it did update once R filled


def test_reduce_sil_roughly_halves_updates(tmp_path):
    full = orchestrate(make_cfg("baseline", seed=9, total_steps=6000),
                       tmp_path / "full")
    half = orchestrate(make_cfg("baseline", seed=9, total_steps=6000,
                                reduce_sil=True), tmp_path / "half")
    attempted = half.sil_updates + half.sil_skipped_parity
    assert half.sil_updates + half.sil_skipped_parity > 0
    ratio = half.sil_updates / attempted
    assert 0.4 <= ratio <= 0.6


def test_t_max_zero_budget_exits_cleanly(tmp_path):
    cfg = make_cfg("baseline", total_steps=0)
    res = orchestrate(cfg, tmp_path / "run")
    assert res.final_step == 0
    assert read_csv(res.run_dir / "eval.csv") == []
    assert read_csv(res.run_dir / "metrics.csv") == []
    assert (res.run_dir / "checkpoints" / "final.ckpt").exists()


def test_threaded_mode_smoke(tmp_path):
    cfg = make_cfg("lider", seed=10, threaded=True, total_steps=3000)
    res = orchestrate(cfg, tmp_path / "run")
    assert res.final_step >= 3000
    assert res.final_step == sum(res.actor_steps) + res.refresher_steps
    assert read_csv(res.run_dir / "eval.csv")

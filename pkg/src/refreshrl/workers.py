"""Training orchestration: actor, self-imitation, and refresher workers.

Actors roll 20-step segments, update the global network against
bootstrapped transformed targets, and push finished episodes into buffer D
with positive-advantage priorities.  The SIL worker replays prioritized
batches (mixing buffers D and R through a transient equal-priority pool)
and applies the self-imitation update.  The refresher teleports a private
environment to a uniformly drawn past state from D, re-rolls it with the
current (or a frozen external) policy, and when the new trajectory beats
the stored return, trains on it and stores it in buffer R.

Two execution modes share all worker code: a deterministic round-robin
scheduler (bit-reproducible; used by every exactness test) and free-running
threads.  The global step T counts real environment interactions only --
actor steps and refresher rollout steps, never SIL updates.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import MetricsCollector, UsageRecord, evaluate
from .config import RunConfig, serialize_config
from .envs import EnvState
from .net import (GlobalParamStore, OptState, ParamSet, a3c_gradient, forward,
                  forward_batch, init_params, load_checkpoint, save_checkpoint,
                  sil_gradient)
from .replay import Experience, PrioritizedBuffer, mix_and_resample
from .runlog import RunDir
from .transform import tb_bootstrap_targets, tb_returns

__all__ = ["GlobalClock", "RefreshEvent", "TrainContext", "ActorWorker",
           "SilWorker", "RefresherWorker", "RunResult", "orchestrate"]


class GlobalClock:
    """Shared environment-step counter with a hard budget."""

    def __init__(self, limit: int):
        self.limit = limit
        self._t = 0
        self._lock = threading.Lock()

    @property
    def t(self) -> int:
        return self._t

    @property
    def done(self) -> bool:
        return self._t >= self.limit

    def increment(self) -> int:
        with self._lock:
            self._t += 1
            return self._t


@dataclass
class RefreshEvent:
    """Journal line for one buffer-R insertion (one per stored trajectory)."""

    gnew: float
    g_sampled: float
    satisfied: bool
    steps: int


@dataclass
class TrainContext:
    """Everything the workers share."""

    cfg: RunConfig
    store: GlobalParamStore
    clock: GlobalClock
    buffer_d: PrioritizedBuffer
    buffer_r: PrioritizedBuffer | None
    collector: MetricsCollector
    rundir: RunDir | None
    journal: list[RefreshEvent] = field(default_factory=list)
    journal_lock: threading.Lock = field(default_factory=threading.Lock)
    start_ns: int = field(default_factory=time.monotonic_ns)

    def wall_ms(self) -> int:
        return (time.monotonic_ns() - self.start_ns) // 1_000_000

    def log_train(self, worker_kind: str, event: str, value) -> None:
        if self.rundir is not None:
            self.rundir.train.write(self.clock.t, self.wall_ms(), worker_kind,
                                    event, value)


def _sample_action(rng: np.random.Generator, probs: np.ndarray, greedy: bool) -> int:
    if greedy:
        return int(np.argmax(probs))
    return int(rng.choice(len(probs), p=probs))


class ActorWorker:
    """On-policy worker: segment updates plus episode pushes into buffer D."""

    kind = "actor"

    def __init__(self, worker_id: int, ctx: TrainContext, env, rng: np.random.Generator):
        self.worker_id = worker_id
        self.ctx = ctx
        self.env = env
        self.rng = rng
        self.steps_taken = 0
        self.episodes = 0
        self.opt = None if ctx.cfg.shared_rmsprop else OptState.for_params(ctx.store.sync())
        self.state: EnvState = env.reset()
        # full-episode accumulators (an episode spans several segments)
        self._ep_states: list[np.ndarray] = []
        self._ep_actions: list[int] = []
        self._ep_rewards: list[float] = []
        self._ep_snaps: list = []

    def iterate(self) -> None:
        if self.ctx.clock.done:
            return
        cfg = self.ctx.cfg
        params = self.ctx.store.sync()
        seg_start = len(self._ep_rewards)
        terminal = False
        for _ in range(cfg.t_max):
            self._ep_snaps.append(self.env.snapshot())
            self._ep_states.append(self.state.features)
            probs, _ = forward(params, self.state.features)
            action = _sample_action(self.rng, probs, greedy=False)
            res = self.env.step(action)
            self._ep_actions.append(action)
            self._ep_rewards.append(res.reward)
            self.state = res.state
            self.steps_taken += 1
            self.ctx.clock.increment()
            if res.terminal:
                terminal = True
                break

        seg_states = np.asarray(self._ep_states[seg_start:])
        seg_actions = self._ep_actions[seg_start:]
        seg_rewards = self._ep_rewards[seg_start:]
        if terminal:
            v_boot = 0.0
        else:
            _, v_boot = forward(params, self.state.features)
        targets = tb_bootstrap_targets(seg_rewards, v_boot, cfg.tb())
        grads = a3c_gradient(params, seg_states, seg_actions, targets, cfg.loss_weights())
        self.ctx.store.apply(grads, opt=self.opt)

        if terminal:
            self._push_episode(params)
            self.state = self.env.reset()

    def _push_episode(self, params: ParamSet) -> None:
        states = np.asarray(self._ep_states)
        returns = tb_returns(self._ep_rewards, self.ctx.cfg.tb())
        _, values = forward_batch(params, states)
        priorities = np.maximum(returns - values, 0.0)
        for i in range(len(returns)):
            exp = Experience(features=states[i], action=self._ep_actions[i],
                             g_return=float(returns[i]), snapshot=self._ep_snaps[i])
            self.ctx.buffer_d.push(exp, float(priorities[i]))
        self.episodes += 1
        self.ctx.log_train(self.kind, "episode_reward", self.env.episode_reward)
        self._ep_states.clear()
        self._ep_actions.clear()
        self._ep_rewards.clear()
        self._ep_snaps.clear()


class SilWorker:
    """Off-policy worker: M prioritized self-imitation updates per iteration."""

    kind = "sil"

    def __init__(self, ctx: TrainContext, rng: np.random.Generator):
        self.ctx = ctx
        self.rng = rng
        self.updates = 0
        self.skipped_parity = 0
        self.d_sourced = 0
        self.r_sourced = 0
        self.opt = None if ctx.cfg.shared_rmsprop else OptState.for_params(ctx.store.sync())

    def _source_ready(self) -> bool:
        cfg = self.ctx.cfg
        if cfg.mode == "lider_sampler":
            return self.ctx.buffer_r is not None and len(self.ctx.buffer_r) > 0
        return len(self.ctx.buffer_d) > 0

    def iterate(self) -> None:
        ctx = self.ctx
        cfg = ctx.cfg
        if ctx.clock.done or not self._source_ready():
            return
        params = ctx.store.sync()
        for _ in range(cfg.sil_updates):
            if cfg.reduce_sil and ctx.clock.t % 2 == 1:
                self.skipped_parity += 1
                continue
            self._one_update(params)

    def _one_update(self, params: ParamSet) -> None:
        ctx = self.ctx
        cfg = ctx.cfg
        k = cfg.batch_size
        sampled_d: list = []
        sampled_r: list = []
        if cfg.mode == "lider_onebuffer":
            sampled_d = ctx.buffer_d.sample_batch(k, self.rng)
            mixed = [("D", e) for e in sampled_d]
        elif cfg.mode == "lider_sampler":
            sampled_r = ctx.buffer_r.sample_batch(k, self.rng)
            mixed = [("R", e) for e in sampled_r]
        else:
            sampled_d = ctx.buffer_d.sample_batch(k, self.rng)
            if ctx.buffer_r is not None and len(ctx.buffer_r) > 0:
                sampled_r = ctx.buffer_r.sample_batch(k, self.rng)
            mixed = mix_and_resample(sampled_d, sampled_r, k, self.rng)

        states = np.asarray([exp.features for _, (_, exp) in mixed])
        actions = [exp.action for _, (_, exp) in mixed]
        targets = np.asarray([exp.g_return for _, (_, exp) in mixed])
        grads = sil_gradient(params, states, actions, targets, cfg.loss_weights())
        ctx.store.apply(grads, opt=self.opt)
        self.updates += 1

        _, values = forward_batch(params, states)
        positive = (targets - values) > 0.0
        rec = UsageRecord(positives_d=0, positives_r=0, batch_size=k)
        for i, (source, (_, exp)) in enumerate(mixed):
            if source == "D":
                self.d_sourced += 1
            else:
                self.r_sourced += 1
            if not positive[i]:
                continue
            if source == "D":
                rec.positives_d += 1
                rec.sum_g_used_d += exp.g_return
            else:
                rec.positives_r += 1
                rec.sum_g_used_r += exp.g_return
            if exp.refreshed:
                rec.used_refreshed += 1
        ctx.collector.record_sil_update(rec)

        if cfg.priority_refresh:
            if sampled_d:
                self._refresh_priorities(params, sampled_d, ctx.buffer_d)
            if sampled_r:
                self._refresh_priorities(params, sampled_r, ctx.buffer_r)

    def _refresh_priorities(self, params: ParamSet, sampled, buf: PrioritizedBuffer) -> None:
        states = np.asarray([exp.features for _, exp in sampled])
        targets = np.asarray([exp.g_return for _, exp in sampled])
        _, values = forward_batch(params, states)
        fresh = np.maximum(targets - values, 0.0)
        for (entry_id, _), pri in zip(sampled, fresh):
            buf.update_priority(entry_id, float(pri))


class RefresherWorker:
    """Teleports to stored states and re-rolls them with a chosen policy."""

    kind = "refresher"

    def __init__(self, ctx: TrainContext, env, rng: np.random.Generator,
                 frozen_policy: ParamSet | None = None):
        self.ctx = ctx
        self.env = env
        self.rng = rng
        self.frozen_policy = frozen_policy
        self.steps_taken = 0
        self.rollouts = 0
        self.restore_failures = 0
        self.opt = None if ctx.cfg.shared_rmsprop else OptState.for_params(ctx.store.sync())

    def iterate(self) -> None:
        ctx = self.ctx
        cfg = ctx.cfg
        if ctx.clock.done or len(ctx.buffer_d) == 0:
            return
        learner_params = ctx.store.sync()
        rollout_params = self.frozen_policy if self.frozen_policy is not None else learner_params

        entry_id, exp = ctx.buffer_d.sample_uniform(self.rng)
        ctx.buffer_d.mark_refreshed(entry_id)
        try:
            state = self.env.restore(exp.snapshot)
        except (ValueError, TypeError, AttributeError):
            self.restore_failures += 1
            return

        states: list[np.ndarray] = []
        actions: list[int] = []
        rewards: list[float] = []
        snaps: list = []
        while not self.env.terminal:
            snaps.append(self.env.snapshot())
            states.append(state.features)
            probs, _ = forward(rollout_params, state.features)
            action = _sample_action(self.rng, probs, greedy=cfg.refresher_greedy)
            res = self.env.step(action)
            actions.append(action)
            rewards.append(res.reward)
            state = res.state
            self.steps_taken += 1
            ctx.clock.increment()

        self.rollouts += 1
        if not rewards:  # restored state was already terminal
            ctx.collector.record_rollout(False, 0.0, exp.g_return)
            ctx.log_train(self.kind, "refresh_fail", 0.0)
            return

        gnew_series = tb_returns(rewards, cfg.tb())
        gnew = float(gnew_series[0])
        success = gnew > exp.g_return
        ctx.collector.record_rollout(success, gnew, exp.g_return)
        ctx.log_train(self.kind, "refresh_success" if success else "refresh_fail", gnew)

        if success or cfg.mode == "lider_addall":
            arr_states = np.asarray(states)
            grads = a3c_gradient(learner_params, arr_states, actions, gnew_series,
                                 cfg.loss_weights())
            ctx.store.apply(grads, opt=self.opt)
            target = ctx.buffer_d if cfg.mode == "lider_onebuffer" else ctx.buffer_r
            _, values = forward_batch(learner_params, arr_states)
            priorities = np.maximum(gnew_series - values, 0.0)
            for i in range(len(actions)):
                new_exp = Experience(features=arr_states[i], action=actions[i],
                                     g_return=float(gnew_series[i]), snapshot=snaps[i])
                target.push(new_exp, float(priorities[i]))
            with ctx.journal_lock:
                ctx.journal.append(RefreshEvent(gnew, exp.g_return, success, len(actions)))


# ------------------------------------------------------------- orchestration


@dataclass
class RunResult:
    run_dir: Path
    mode: str
    seed: int
    final_step: int
    actor_steps: list[int]
    refresher_steps: int
    actor_episodes: int
    sil_updates: int
    sil_skipped_parity: int
    sil_d_sourced: int
    sil_r_sourced: int
    journal: list[RefreshEvent]
    refresh_rollouts: int
    refresh_successes: int
    final_eval_mean: float | None
    final_eval_std: float | None
    d_capacity: int
    r_constructed: bool


def build_context(cfg: RunConfig, rundir: RunDir | None) -> TrainContext:
    env_probe = cfg.env_factory()()
    params = init_params(env_probe.obs_dim, env_probe.n_actions, seed=cfg.seed)
    store = GlobalParamStore(params, lr=cfg.lr, max_norm=cfg.grad_clip,
                             decay=cfg.rmsprop_decay, eps=cfg.rmsprop_eps,
                             momentum=cfg.rmsprop_momentum)
    buffer_d = PrioritizedBuffer(cfg.d_capacity, cfg.priority_exponent, cfg.priority_floor)
    buffer_r = PrioritizedBuffer(cfg.buffer_capacity, cfg.priority_exponent,
                                 cfg.priority_floor) if cfg.two_buffer else None
    return TrainContext(cfg=cfg, store=store, clock=GlobalClock(cfg.total_steps),
                        buffer_d=buffer_d, buffer_r=buffer_r,
                        collector=MetricsCollector(), rundir=rundir)


def _spawn_workers(ctx: TrainContext):
    cfg = ctx.cfg
    factory = cfg.env_factory()
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.actor_count + 2)
    actors = [ActorWorker(i, ctx, factory(), np.random.default_rng(seeds[i]))
              for i in range(cfg.actor_count)]
    sil = SilWorker(ctx, np.random.default_rng(seeds[cfg.actor_count]))
    refresher = None
    if cfg.has_refresher:
        frozen = None
        if cfg.mode in ("lider_ta", "lider_bc"):
            frozen, _ = load_checkpoint(cfg.policy_path)
            probe = factory()
            if frozen.in_dim != probe.obs_dim or frozen.n_actions != probe.n_actions:
                raise ValueError(
                    f"policy_path checkpoint shape ({frozen.in_dim}, {frozen.n_actions}) "
                    f"does not fit environment ({probe.obs_dim}, {probe.n_actions})")
        refresher = RefresherWorker(ctx, factory(), np.random.default_rng(seeds[-1]),
                                    frozen_policy=frozen)
    return actors, sil, refresher


class _Cadence:
    """Tracks interval boundaries for eval/metrics/checkpoint emission."""

    def __init__(self, interval: int):
        self.interval = interval
        self.next_at = interval

    def due(self, t: int) -> list[int]:
        boundaries = []
        while t >= self.next_at:
            boundaries.append(self.next_at)
            self.next_at += self.interval
        return boundaries


def _run_eval(ctx: TrainContext, at_step: int) -> tuple[float, float]:
    cfg = ctx.cfg
    params = ctx.store.sync()
    mean, std, rewards = evaluate(params, cfg.env_factory(), cfg.eval_episodes,
                                  seed=cfg.seed)
    if ctx.rundir is not None:
        for i, r in enumerate(rewards):
            ctx.rundir.eval.write(at_step, cfg.seed, cfg.mode, i, r)
        ctx.rundir.write_metrics_row(ctx.collector.flush(at_step))
    ctx.log_train("orchestrator", "eval_mean", mean)
    return mean, std


def orchestrate(cfg: RunConfig, run_dir: str | Path) -> RunResult:
    """Run one full training job; returns audited counters and artifacts."""
    cfg.validate()
    rundir = RunDir(run_dir)
    rundir.write_config(serialize_config(cfg))
    ctx = build_context(cfg, rundir)
    actors, sil, refresher = _spawn_workers(ctx)
    workers = [*actors, sil] + ([refresher] if refresher is not None else [])

    evals = _Cadence(cfg.eval_interval)
    checkpoints = _Cadence(cfg.checkpoint_interval)
    last_eval: tuple[float, float] | None = None

    def process_boundaries() -> None:
        nonlocal last_eval
        for at in evals.due(ctx.clock.t):
            last_eval = _run_eval(ctx, at)
        for at in checkpoints.due(ctx.clock.t):
            save_checkpoint(rundir.checkpoint_path(f"step_{at}"), ctx.store.sync(),
                            ctx.store.snapshot_opt())
            ctx.log_train("orchestrator", "checkpoint", at)

    if cfg.threaded:
        def run_worker(w):
            while not ctx.clock.done:
                w.iterate()
                if isinstance(w, SilWorker) and not w._source_ready():
                    time.sleep(0.001)

        threads = [threading.Thread(target=run_worker, args=(w,)) for w in workers]
        for t in threads:
            t.start()
        while not ctx.clock.done:
            process_boundaries()
            time.sleep(0.005)
        for t in threads:
            t.join()
        process_boundaries()
    else:
        while not ctx.clock.done:
            for w in workers:
                if ctx.clock.done:
                    break
                w.iterate()
            process_boundaries()

    if last_eval is None and ctx.clock.t > 0:
        last_eval = _run_eval(ctx, ctx.clock.t)
    save_checkpoint(rundir.checkpoint_path("final"), ctx.store.sync(),
                    ctx.store.snapshot_opt())

    lifetime = ctx.collector.lifetime_refresh
    result = RunResult(
        run_dir=rundir.path,
        mode=cfg.mode,
        seed=cfg.seed,
        final_step=ctx.clock.t,
        actor_steps=[a.steps_taken for a in actors],
        refresher_steps=refresher.steps_taken if refresher else 0,
        actor_episodes=sum(a.episodes for a in actors),
        sil_updates=sil.updates,
        sil_skipped_parity=sil.skipped_parity,
        sil_d_sourced=sil.d_sourced,
        sil_r_sourced=sil.r_sourced,
        journal=ctx.journal,
        refresh_rollouts=lifetime.rollouts,
        refresh_successes=lifetime.successes,
        final_eval_mean=last_eval[0] if last_eval else None,
        final_eval_std=last_eval[1] if last_eval else None,
        d_capacity=ctx.buffer_d.capacity,
        r_constructed=ctx.buffer_r is not None,
    )
    rundir.write_summary({
        "mode": cfg.mode,
        "seed": cfg.seed,
        "final_step": result.final_step,
        "actor_steps": sum(result.actor_steps),
        "refresher_steps": result.refresher_steps,
        "actor_episodes": result.actor_episodes,
        "sil_updates": result.sil_updates,
        "refresh_rollouts": result.refresh_rollouts,
        "refresh_successes": result.refresh_successes,
        "r_insertions": len(result.journal),
        "r_insertions_satisfied": sum(e.satisfied for e in result.journal),
        "final_eval_mean": result.final_eval_mean,
        "final_eval_std": result.final_eval_std,
    })
    rundir.close()
    return result

"""Behavior-cloning pretraining from synthesized demonstrations.

Demonstrations are rolled out in-engine (scripted heuristics or a frozen
checkpoint policy), stored with per-step transformed returns, and used to
jointly train the policy head (cross-entropy against demo actions) and the
value head (squared regression on the transformed return) with Adam.  The
resulting parameter set plugs straight into the refresher.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .net import ParamSet, _forward_cache, _backward, forward, init_params
from .transform import TBConfig, tb_returns

__all__ = ["DemoSet", "collect_demos", "scripted_policy", "policy_from_params",
           "save_demos", "load_demos", "train_bc", "bc_loss", "greedy_agreement"]


@dataclass
class DemoEpisode:
    states: list
    actions: list
    rewards: list
    returns: np.ndarray = field(default=None)


@dataclass
class DemoSet:
    """Complete demonstration episodes with per-step transformed returns."""

    episodes: list[DemoEpisode]
    n_actions: int

    def flatten(self):
        states = np.asarray([s for ep in self.episodes for s in ep.states])
        actions = np.asarray([a for ep in self.episodes for a in ep.actions])
        returns = np.concatenate([ep.returns for ep in self.episodes])
        return states, actions, returns

    @property
    def n_steps(self) -> int:
        return sum(len(ep.rewards) for ep in self.episodes)


def scripted_policy(name: str, noise: float = 0.0):
    """Simple demo heuristics; ``noise`` is the chance of a uniform action."""
    def act(state, n_actions: int, rng: np.random.Generator) -> int:
        if noise > 0.0 and rng.random() < noise:
            return int(rng.integers(n_actions))
        if name == "right":
            return 1
        if name == "random":
            return int(rng.integers(n_actions))
        raise ValueError(f"unknown scripted policy {name!r}")
    return act


def policy_from_params(params: ParamSet, greedy: bool = True):
    """Wrap a trained parameter set as a demo policy."""
    def act(state, n_actions: int, rng: np.random.Generator) -> int:
        probs, _ = forward(params, state.features)
        return int(np.argmax(probs)) if greedy else int(rng.choice(n_actions, p=probs))
    return act


def collect_demos(policy, env_factory, episodes: int, seed: int,
                  tb: TBConfig | None = None) -> DemoSet:
    """Roll full episodes with ``policy`` and attach transformed returns."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    tb = tb or TBConfig()
    rng = np.random.default_rng(seed)
    out = []
    n_actions = 0
    for _ in range(episodes):
        env = env_factory()
        state = env.reset()
        n_actions = state.n_actions
        ep = DemoEpisode(states=[], actions=[], rewards=[])
        while True:
            action = policy(state, state.n_actions, rng)
            res = env.step(action)
            ep.states.append(state.features)
            ep.actions.append(action)
            ep.rewards.append(res.reward)
            state = res.state
            if res.terminal:
                break
        ep.returns = tb_returns(ep.rewards, tb)
        out.append(ep)
    return DemoSet(episodes=out, n_actions=n_actions)


def save_demos(path: str | Path, demos: DemoSet) -> None:
    """One step per line: episode id, step index, features (comma-joined), action, reward."""
    lines = []
    for ep_id, ep in enumerate(demos.episodes):
        for i, (s, a, r) in enumerate(zip(ep.states, ep.actions, ep.rewards)):
            feats = ",".join(repr(float(x)) for x in s)
            lines.append(f"{ep_id} {i} {feats} {a} {r!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_demos(path: str | Path, tb: TBConfig | None = None,
               n_actions: int | None = None) -> DemoSet:
    """Parse the demo file and recompute transformed returns per episode."""
    tb = tb or TBConfig()
    episodes: dict[int, DemoEpisode] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            ep_id, step_idx, feats, action, reward = line.split()
            ep = episodes.setdefault(int(ep_id), DemoEpisode([], [], []))
            assert int(step_idx) == len(ep.states)
            ep.states.append(np.array([float(x) for x in feats.split(",")]))
            ep.actions.append(int(action))
            ep.rewards.append(float(reward))
        except (ValueError, AssertionError) as exc:
            raise ValueError(f"malformed demo line {lineno}: {line!r}") from exc
    if not episodes:
        raise ValueError("demo file holds no steps")
    out = [episodes[k] for k in sorted(episodes)]
    for ep in out:
        ep.returns = tb_returns(ep.rewards, tb)
    inferred = max(max(ep.actions) for ep in out) + 1
    return DemoSet(episodes=out, n_actions=n_actions or inferred)


def bc_loss(params: ParamSet, states, actions, returns) -> tuple[float, float]:
    """(mean cross-entropy, mean 0.5*(G - V)^2) on a demo batch."""
    probs, value, _ = _forward_cache(params, np.asarray(states, dtype=np.float64))
    idx = np.arange(len(actions))
    ce = float(np.mean(-np.log(probs[idx, np.asarray(actions)])))
    ve = float(np.mean(0.5 * (np.asarray(returns) - value) ** 2))
    return ce, ve


def train_bc(demos: DemoSet, steps: int, batch: int = 32, seed: int = 0,
             lr: float = 5e-4, adam_eps: float = 1e-5, beta1: float = 0.9,
             beta2: float = 0.999, l2: float = 1e-5,
             value_weight: float = 1.0) -> ParamSet:
    """Joint supervised-action + value-regression training with Adam.

    Loss per minibatch: mean cross-entropy against demo actions plus
    ``value_weight`` times the mean 0.5*(G - V)^2 regression term.
    """
    if demos.n_steps == 0:
        raise ValueError("empty demo set")
    states, actions, returns = demos.flatten()
    params = init_params(states.shape[1], demos.n_actions, seed=seed)
    if steps == 0:
        return params
    rng = np.random.default_rng(seed)
    m = params.zeros_like()
    v = params.zeros_like()
    for t in range(1, steps + 1):
        idx = rng.integers(0, len(actions), size=batch)
        bs, ba, bg = states[idx], actions[idx], returns[idx]
        probs, value, cache = _forward_cache(params, bs)
        onehot = np.zeros_like(probs)
        onehot[np.arange(batch), ba] = 1.0
        dlogits = (probs - onehot) / batch
        dvalue = -value_weight * (bg - value) / batch
        grads = _backward(params, cache, dlogits, dvalue)
        for k, g in grads.items():
            g += l2 * params.arrays[k]
            m[k] = beta1 * m[k] + (1.0 - beta1) * g
            v[k] = beta2 * v[k] + (1.0 - beta2) * g * g
            mhat = m[k] / (1.0 - beta1**t)
            vhat = v[k] / (1.0 - beta2**t)
            params.arrays[k] -= lr * mhat / (np.sqrt(vhat) + adam_eps)
    return params


def greedy_agreement(params: ParamSet, demos: DemoSet) -> float:
    """Share of demo states where argmax pi matches the demonstrated action."""
    states, actions, _ = demos.flatten()
    probs, _, _ = _forward_cache(params, states)
    return float(np.mean(np.argmax(probs, axis=1) == actions))

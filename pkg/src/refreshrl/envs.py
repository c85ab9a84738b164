"""Deterministic snapshot-resettable toy environments.

Two small tasks stand in for sparse- and dense-reward settings:

* ``ChainWorld(n)`` -- cells 0..n-1, actions LEFT/RIGHT.  RIGHT moves one
  cell right; LEFT teleports back to cell 0.  Reward 1 only on entering the
  rightmost cell (terminal).  Step cap 4n.  Observations are a one-hot cell
  vector.  Undirected exploration rarely reaches the goal, so this is the
  hard-exploration case.
* ``CollectGrid(width, height)`` -- 4-directional movement on a grid with
  pellets (+1 each) and one fruit (+5); terminal when everything is
  collected or after 8*width*height steps.  Observations concatenate the
  one-hot agent position with a collectible-presence bitmap.

Both environments are strictly deterministic and can capture/restore their
complete internals, including the elapsed step counter, so a restored
rollout inherits the remaining episode budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

__all__ = ["EnvState", "StepResult", "Snapshot", "ChainWorld", "CollectGrid", "make_env"]

LEFT, RIGHT = 0, 1  # ChainWorld actions
GRID_UP, GRID_RIGHT, GRID_DOWN, GRID_LEFT = 0, 1, 2, 3


@dataclass(frozen=True)
class EnvState:
    """Observation handed to the network: feature vector plus action count."""

    features: np.ndarray
    n_actions: int


@dataclass(frozen=True)
class StepResult:
    state: EnvState
    reward: float
    terminal: bool


@dataclass(frozen=True)
class Snapshot:
    """Complete, restorable capture of environment internals."""

    family: str
    params: tuple
    payload: tuple


class _ToyEnv:
    """Shared plumbing: step bookkeeping, snapshot compatibility checks."""

    family = ""

    def __init__(self):
        self._steps = 0
        self._episode_reward = 0.0
        self._terminal = True  # must reset before stepping

    @property
    def steps_taken(self) -> int:
        return self._steps

    @property
    def episode_reward(self) -> float:
        return self._episode_reward

    @property
    def terminal(self) -> bool:
        return self._terminal

    def _constructor_params(self) -> tuple:
        raise NotImplementedError

    def _capture(self) -> tuple:
        raise NotImplementedError

    def _restore_payload(self, payload: tuple) -> None:
        raise NotImplementedError

    def _observe(self) -> EnvState:
        raise NotImplementedError

    def snapshot(self) -> Snapshot:
        return Snapshot(self.family, self._constructor_params(),
                        (self._steps, self._episode_reward, self._terminal) + self._capture())

    def restore(self, snap: Snapshot) -> EnvState:
        if snap.family != self.family or snap.params != self._constructor_params():
            raise ValueError(
                f"snapshot from {snap.family}{snap.params} is incompatible with "
                f"{self.family}{self._constructor_params()}")
        self._steps, self._episode_reward, self._terminal = snap.payload[:3]
        self._restore_payload(snap.payload[3:])
        return self._observe()

    def _require_live(self, action: int, n_actions: int) -> None:
        if self._terminal:
            raise RuntimeError("step called on a terminal environment; reset or restore first")
        if not 0 <= action < n_actions:
            raise ValueError(f"action {action} out of range [0, {n_actions})")


class ChainWorld(_ToyEnv):
    """Sparse-reward chain: RIGHT inches toward the goal, LEFT resets to cell 0."""

    family = "chain"
    n_actions = 2

    def __init__(self, n: int):
        super().__init__()
        if n < 2:
            raise ValueError("ChainWorld needs at least 2 cells")
        self.n = n
        self.step_cap = 4 * n
        self._cell = 0

    @property
    def obs_dim(self) -> int:
        return self.n

    def _constructor_params(self) -> tuple:
        return (self.n,)

    def _capture(self) -> tuple:
        return (self._cell,)

    def _restore_payload(self, payload: tuple) -> None:
        (self._cell,) = payload

    def _observe(self) -> EnvState:
        features = np.zeros(self.n)
        features[self._cell] = 1.0
        return EnvState(features, self.n_actions)

    def reset(self) -> EnvState:
        self._cell = 0
        self._steps = 0
        self._episode_reward = 0.0
        self._terminal = False
        return self._observe()

    def step(self, action: int) -> StepResult:
        self._require_live(action, self.n_actions)
        self._cell = self._cell + 1 if action == RIGHT else 0
        self._steps += 1
        reward = 1.0 if self._cell == self.n - 1 else 0.0
        self._episode_reward += reward
        self._terminal = self._cell == self.n - 1 or self._steps >= self.step_cap
        return StepResult(self._observe(), reward, self._terminal)


class CollectGrid(_ToyEnv):
    """Dense-reward grid: gather pellets (+1) and one fruit (+5)."""

    family = "grid"
    n_actions = 4

    def __init__(self, width: int, height: int, n_pellets: int = 3, layout_seed: int = 0):
        super().__init__()
        if width < 2 or height < 2:
            raise ValueError("CollectGrid needs at least a 2x2 grid")
        if not 1 <= n_pellets <= width * height - 2:
            raise ValueError("n_pellets must leave room for the start cell and the fruit")
        self.width = width
        self.height = height
        self.n_pellets = n_pellets
        self.layout_seed = layout_seed
        self.step_cap = 8 * width * height
        # fixed layout per constructor params: items on distinct non-start cells
        rng = np.random.default_rng(layout_seed)
        cells = [c for c in range(width * height) if c != 0]
        picks = rng.choice(len(cells), size=n_pellets + 1, replace=False)
        self.pellet_cells = tuple(cells[i] for i in picks[:-1])
        self.fruit_cell = cells[picks[-1]]
        self._agent = 0
        self._pellets_left = (True,) * n_pellets
        self._fruit_left = True

    @property
    def obs_dim(self) -> int:
        return self.width * self.height + self.n_pellets + 1

    def _constructor_params(self) -> tuple:
        return (self.width, self.height, self.n_pellets, self.layout_seed)

    def _capture(self) -> tuple:
        return (self._agent, self._pellets_left, self._fruit_left)

    def _restore_payload(self, payload: tuple) -> None:
        self._agent, self._pellets_left, self._fruit_left = payload

    def _observe(self) -> EnvState:
        features = np.zeros(self.obs_dim)
        features[self._agent] = 1.0
        base = self.width * self.height
        for i, present in enumerate(self._pellets_left):
            features[base + i] = 1.0 if present else 0.0
        features[base + self.n_pellets] = 1.0 if self._fruit_left else 0.0
        return EnvState(features, self.n_actions)

    def reset(self) -> EnvState:
        self._agent = 0
        self._pellets_left = (True,) * self.n_pellets
        self._fruit_left = True
        self._steps = 0
        self._episode_reward = 0.0
        self._terminal = False
        return self._observe()

    def step(self, action: int) -> StepResult:
        self._require_live(action, self.n_actions)
        x, y = self._agent % self.width, self._agent // self.width
        if action == GRID_UP:
            y = max(y - 1, 0)
        elif action == GRID_DOWN:
            y = min(y + 1, self.height - 1)
        elif action == GRID_LEFT:
            x = max(x - 1, 0)
        else:
            x = min(x + 1, self.width - 1)
        self._agent = y * self.width + x
        self._steps += 1
        reward = 0.0
        if self._fruit_left and self._agent == self.fruit_cell:
            reward += 5.0
            self._fruit_left = False
        if self._agent in self.pellet_cells:
            i = self.pellet_cells.index(self._agent)
            if self._pellets_left[i]:
                reward += 1.0
                left = list(self._pellets_left)
                left[i] = False
                self._pellets_left = tuple(left)
        self._episode_reward += reward
        done = (not self._fruit_left and not any(self._pellets_left)) \
            or self._steps >= self.step_cap
        self._terminal = done
        return StepResult(self._observe(), reward, done)


def make_env(family: str, **kwargs: Any):
    """Environment factory used by the run configuration."""
    if family == "chain":
        return ChainWorld(kwargs["n"])
    if family == "grid":
        return CollectGrid(kwargs["width"], kwargs["height"],
                           n_pellets=kwargs.get("n_pellets", 3),
                           layout_seed=kwargs.get("layout_seed", 0))
    raise ValueError(f"unknown environment family {family!r}")

"""Squashed-return algebra: the value transform, its inverse, and return recursions.

The value head of the network lives in *transformed* space: targets are built
by squashing with ``h`` and un-squashing intermediate bootstrap values with
``h_inv``.  Monte-Carlo returns for the replay buffer are computed backward
over a finished episode with the same recursion, so stored returns and
bootstrap targets are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TBConfig", "h", "h_inv", "tb_returns", "tb_bootstrap_target", "tb_bootstrap_targets"]


@dataclass(frozen=True)
class TBConfig:
    """Parameters of the transformed-return recursion.

    epsilon > 0 keeps the inverse closed-form and Lipschitz; epsilon == 0 is
    allowed as a test configuration (the inverse then degenerates to the
    parabola branch).
    """

    epsilon: float = 1e-2
    gamma: float = 0.99

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")


def _check_finite(x: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")


def h(z, epsilon: float = 1e-2):
    """Squash ``z``: sign(z)*(sqrt(|z|+1)-1) + epsilon*z.

    Odd, strictly increasing, h(0) = 0.  Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=np.float64)
    _check_finite(z, "z")
    out = np.sign(z) * (np.sqrt(np.abs(z) + 1.0) - 1.0) + epsilon * z
    return float(out) if out.ndim == 0 else out


def h_inv(x, epsilon: float = 1e-2):
    """Exact inverse of :func:`h` for the same epsilon.

    For epsilon == 0 the closed form degenerates to sign(x)*((|x|+1)^2 - 1).
    """
    x = np.asarray(x, dtype=np.float64)
    _check_finite(x, "x")
    ax = np.abs(x)
    if epsilon == 0.0:
        out = np.sign(x) * ((ax + 1.0) ** 2 - 1.0)
    else:
        root = np.sqrt(1.0 + 4.0 * epsilon * (ax + 1.0 + epsilon))
        out = np.sign(x) * (((root - 1.0) / (2.0 * epsilon)) ** 2 - 1.0)
    return float(out) if out.ndim == 0 else out


def tb_returns(rewards, cfg: TBConfig) -> np.ndarray:
    """Per-step transformed Monte-Carlo returns of a complete episode suffix.

    Computed backward with G = h(r + gamma * h_inv(G)), seeded with G = 0
    past the terminal step.  Returns an array of the same length.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    _check_finite(rewards, "rewards")
    return tb_bootstrap_targets(rewards, 0.0, cfg)


def tb_bootstrap_target(rewards, v_boot: float, cfg: TBConfig) -> float:
    """N-step bootstrapped target at the root of a reward segment.

    ``v_boot`` is the value-head output for the state after the segment and
    is already in transformed space; it seeds the backward recursion.
    """
    out = tb_bootstrap_targets(rewards, v_boot, cfg)
    if out.size == 0:
        raise ValueError("bootstrap target needs at least one reward")
    return float(out[0])


def tb_bootstrap_targets(rewards, v_boot: float, cfg: TBConfig, squash=None) -> np.ndarray:
    """Per-step targets for a segment: the recursion value at every index.

    ``squash`` overrides the (h, h_inv) pair; passing a pair of identities
    recovers plain discounted returns (test hook only).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    _check_finite(rewards, "rewards")
    if not np.isfinite(v_boot):
        raise ValueError("v_boot must be finite")
    if squash is None:
        fwd, inv = (lambda z: h(z, cfg.epsilon)), (lambda x: h_inv(x, cfg.epsilon))
    else:
        fwd, inv = squash
    out = np.empty(rewards.shape[0], dtype=np.float64)
    g = float(v_boot)
    for i in range(rewards.shape[0] - 1, -1, -1):
        g = fwd(rewards[i] + cfg.gamma * inv(g))
        out[i] = g
    return out

"""Fully connected actor-critic network with hand-derived gradients.

Layout is fixed at construction: two ReLU trunk layers, a softmax policy
head and a scalar value head (the value head approximates returns in
transformed space).  Gradients for both the on-policy and the
self-imitation losses are derived by hand; no autodiff framework.

The shared :class:`GlobalParamStore` is the only cross-worker mutable
state: ``sync`` hands out consistent full copies and ``apply`` commits one
clipped RMSProp step at a time.
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass

import numpy as np

PARAM_ORDER = ("w1", "b1", "w2", "b2", "wp", "bp", "wv", "bv")

CHECKPOINT_MAGIC = b"RRLCKPT\x00"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class LossWeights:
    """Loss-term weights: value weight, entropy weight, SIL value weight."""

    alpha: float = 0.5
    beta_a3c: float = 0.01
    beta_sil: float = 0.1

    def __post_init__(self) -> None:
        if min(self.alpha, self.beta_a3c, self.beta_sil) < 0:
            raise ValueError("loss weights must be >= 0")


class ParamSet:
    """All network parameters, in a fixed named layout.

    arrays: w1 [in,h1], b1 [h1], w2 [h1,h2], b2 [h2], wp [h2,A], bp [A],
    wv [h2,1], bv [1].
    """

    __slots__ = ("arrays",)

    def __init__(self, arrays: dict[str, np.ndarray]):
        if tuple(arrays.keys()) != PARAM_ORDER:
            raise ValueError(f"parameter layout must be {PARAM_ORDER}")
        self.arrays = arrays

    @property
    def in_dim(self) -> int:
        return self.arrays["w1"].shape[0]

    @property
    def n_actions(self) -> int:
        return self.arrays["wp"].shape[1]

    @property
    def hidden(self) -> tuple[int, int]:
        return (self.arrays["w1"].shape[1], self.arrays["w2"].shape[1])

    def copy(self) -> "ParamSet":
        return ParamSet({k: v.copy() for k, v in self.arrays.items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays.values())


def init_params(in_dim: int, n_actions: int, hidden: tuple[int, int] = (64, 64),
                seed: int = 0) -> ParamSet:
    """Fan-in-scaled uniform init; all biases zero so the initial policy is uniform."""
    if in_dim < 1 or n_actions < 1:
        raise ValueError("in_dim and n_actions must be positive")
    rng = np.random.default_rng(seed)

    def fan_in(n_in: int, n_out: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(n_in)
        return rng.uniform(-bound, bound, size=(n_in, n_out))

    h1, h2 = hidden
    return ParamSet({
        "w1": fan_in(in_dim, h1),
        "b1": np.zeros(h1),
        "w2": fan_in(h1, h2),
        "b2": np.zeros(h2),
        "wp": fan_in(h2, n_actions),
        "bp": np.zeros(n_actions),
        "wv": fan_in(h2, 1),
        "bv": np.zeros(1),
    })


def zero_params(in_dim: int, n_actions: int, hidden: tuple[int, int] = (64, 64)) -> ParamSet:
    p = init_params(in_dim, n_actions, hidden)
    return ParamSet({k: np.zeros_like(v) for k, v in p.arrays.items()})


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_cache(params: ParamSet, x: np.ndarray):
    a = params.arrays
    z1 = x @ a["w1"] + a["b1"]
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ a["w2"] + a["b2"]
    a2 = np.maximum(z2, 0.0)
    logits = a2 @ a["wp"] + a["bp"]
    value = (a2 @ a["wv"]).ravel() + a["bv"][0]
    probs = _softmax(logits)
    return probs, value, (x, z1, a1, z2, a2)


def forward_batch(params: ParamSet, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Policy distributions and transformed-space values for a batch of states."""
    states = np.asarray(states, dtype=np.float64)
    if states.ndim != 2 or states.shape[1] != params.in_dim:
        raise ValueError(f"expected states of shape [n, {params.in_dim}], got {states.shape}")
    probs, value, _ = _forward_cache(params, states)
    return probs, value


def forward(params: ParamSet, features: np.ndarray) -> tuple[np.ndarray, float]:
    """Single-state forward pass: (action probabilities, value-head scalar)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 1 or features.shape[0] != params.in_dim:
        raise ValueError(f"expected features of shape [{params.in_dim}], got {features.shape}")
    probs, value = forward_batch(params, features[None, :])
    return probs[0], float(value[0])


def entropy(probs: np.ndarray) -> float:
    """Shannon entropy -sum(p ln p), with 0*ln(0) taken as 0."""
    p = np.asarray(probs, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    return float(-terms.sum())


def _backward(params: ParamSet, cache, dlogits: np.ndarray, dvalue: np.ndarray) -> dict[str, np.ndarray]:
    a = params.arrays
    x, z1, a1, z2, a2 = cache
    grads = {}
    grads["wp"] = a2.T @ dlogits
    grads["bp"] = dlogits.sum(axis=0)
    grads["wv"] = a2.T @ dvalue[:, None]
    grads["bv"] = np.array([dvalue.sum()])
    da2 = dlogits @ a["wp"].T + dvalue[:, None] @ a["wv"].T
    dz2 = da2 * (z2 > 0.0)
    grads["w2"] = a1.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    da1 = dz2 @ a["w2"].T
    dz1 = da1 * (z1 > 0.0)
    grads["w1"] = x.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return {k: grads[k] for k in PARAM_ORDER}


def _as_batch(states, actions, targets, in_dim: int):
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.intp)
    targets = np.asarray(targets, dtype=np.float64)
    if states.ndim != 2 or states.shape[1] != in_dim:
        raise ValueError(f"expected states of shape [n, {in_dim}], got {states.shape}")
    if states.shape[0] == 0:
        raise ValueError("empty batch")
    if not (np.all(np.isfinite(states)) and np.all(np.isfinite(targets))):
        raise ValueError("states and targets must be finite")
    return states, actions, targets


def a3c_gradient(params: ParamSet, states, actions, targets,
                 weights: LossWeights) -> dict[str, np.ndarray]:
    """Gradient of the on-policy loss, summed over the segment.

    Loss per sample: -log pi(a|s)*(G-V) - beta*H(pi(s)) + alpha*(G-V)^2,
    with the advantage (G-V) held constant in the policy coefficient.
    """
    states, actions, targets = _as_batch(states, actions, targets, params.in_dim)
    probs, value, cache = _forward_cache(params, states)
    adv = targets - value
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(actions)), actions] = 1.0
    dlogits = (probs - onehot) * adv[:, None]
    if weights.beta_a3c != 0.0:
        logp = np.where(probs > 0.0, np.log(probs), 0.0)
        ent = -(probs * logp).sum(axis=1)
        # d(-beta*H)/dlogits = beta * p * (log p + H)
        dlogits += weights.beta_a3c * probs * (logp + ent[:, None])
    dvalue = -2.0 * weights.alpha * adv
    return _backward(params, cache, dlogits, dvalue)


def sil_gradient(params: ParamSet, states, actions, targets,
                 weights: LossWeights) -> dict[str, np.ndarray]:
    """Gradient of the self-imitation loss, summed over the batch.

    Loss per sample: -log pi(a|s)*(G-V)_+ + beta_sil*0.5*((G-V)_+)^2.
    Samples with non-positive advantage contribute exactly zero.
    """
    states, actions, targets = _as_batch(states, actions, targets, params.in_dim)
    probs, value, cache = _forward_cache(params, states)
    advp = np.maximum(targets - value, 0.0)
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(actions)), actions] = 1.0
    dlogits = (probs - onehot) * advp[:, None]
    dvalue = -weights.beta_sil * advp
    return _backward(params, cache, dlogits, dvalue)


def a3c_loss(params: ParamSet, states, actions, targets, weights: LossWeights,
             policy_coef: np.ndarray) -> float:
    """Scalar on-policy loss with the policy coefficient supplied as data.

    Passing policy_coef = (G - V) evaluated at these same params makes this
    the surrogate whose gradient :func:`a3c_gradient` computes; useful as a
    finite-difference target.
    """
    states, actions, targets = _as_batch(states, actions, targets, params.in_dim)
    probs, value, _ = _forward_cache(params, states)
    logp = np.log(probs[np.arange(len(actions)), actions])
    ent = np.array([entropy(p) for p in probs])
    adv = targets - value
    return float(np.sum(-logp * policy_coef - weights.beta_a3c * ent + weights.alpha * adv**2))


def sil_loss(params: ParamSet, states, actions, targets, weights: LossWeights,
             policy_coef: np.ndarray) -> float:
    """Scalar self-imitation loss with the policy coefficient supplied as data."""
    states, actions, targets = _as_batch(states, actions, targets, params.in_dim)
    probs, value, _ = _forward_cache(params, states)
    logp = np.log(probs[np.arange(len(actions)), actions])
    advp = np.maximum(targets - value, 0.0)
    return float(np.sum(-logp * policy_coef + weights.beta_sil * 0.5 * advp**2))


def advantages(params: ParamSet, states, targets) -> np.ndarray:
    """G - V(s) for a batch; the positive part doubles as replay priority."""
    states = np.asarray(states, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    _, value = forward_batch(params, states)
    return targets - value


@dataclass
class OptState:
    """RMSProp running statistics plus update diagnostics."""

    mean_square: dict[str, np.ndarray]
    momentum_buf: dict[str, np.ndarray]
    steps: int = 0
    skipped_non_finite: int = 0

    @classmethod
    def for_params(cls, params: ParamSet) -> "OptState":
        return cls(mean_square=params.zeros_like(), momentum_buf=params.zeros_like())


def global_grad_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_and_apply(params: ParamSet, opt: OptState, grads: dict[str, np.ndarray],
                   lr: float, max_norm: float | None = 0.5, decay: float = 0.99,
                   eps: float = 1e-5, momentum: float = 0.0) -> None:
    """Clip the global gradient norm, then take one RMSProp step in place.

    m <- decay*m + (1-decay)*g^2 ; p <- p - lr*g/sqrt(m + eps).
    Non-finite gradients skip the update entirely (counted in diagnostics).
    """
    if set(grads) != set(PARAM_ORDER):
        raise ValueError("gradient layout does not match parameter layout")
    if not all(np.all(np.isfinite(g)) for g in grads.values()):
        opt.skipped_non_finite += 1
        return
    norm = global_grad_norm(grads)
    if max_norm is not None and norm > max_norm:
        scale = max_norm / norm
        grads = {k: g * scale for k, g in grads.items()}
    for k in PARAM_ORDER:
        g = grads[k]
        m = opt.mean_square[k]
        m *= decay
        m += (1.0 - decay) * g * g
        step = lr * g / np.sqrt(m + eps)
        if momentum != 0.0:
            buf = opt.momentum_buf[k]
            buf *= momentum
            buf += step
            step = buf
        params.arrays[k] -= step
    opt.steps += 1


class GlobalParamStore:
    """Shared parameter store: consistent copies out, serialized updates in.

    ``sync`` never returns a torn mixture of two updates; ``apply`` commits
    whole clipped RMSProp steps one at a time.  Workers are free to hold and
    use stale copies between syncs.
    """

    def __init__(self, params: ParamSet, lr: float, max_norm: float | None = 0.5,
                 decay: float = 0.99, eps: float = 1e-5, momentum: float = 0.0):
        self._params = params.copy()
        self._opt = OptState.for_params(params)
        self._lock = threading.Lock()
        self.lr = lr
        self.max_norm = max_norm
        self.decay = decay
        self.eps = eps
        self.momentum = momentum
        self.version = 0

    def sync(self) -> ParamSet:
        with self._lock:
            return self._params.copy()

    def apply(self, grads: dict[str, np.ndarray], lr: float | None = None,
              opt: OptState | None = None) -> None:
        """Commit one update; pass a private OptState to opt out of the shared one."""
        with self._lock:
            clip_and_apply(self._params, opt if opt is not None else self._opt,
                           grads, self.lr if lr is None else lr,
                           max_norm=self.max_norm, decay=self.decay,
                           eps=self.eps, momentum=self.momentum)
            self.version += 1

    def snapshot_opt(self) -> OptState:
        with self._lock:
            return OptState(
                mean_square={k: v.copy() for k, v in self._opt.mean_square.items()},
                momentum_buf={k: v.copy() for k, v in self._opt.momentum_buf.items()},
                steps=self._opt.steps,
                skipped_non_finite=self._opt.skipped_non_finite,
            )


def save_checkpoint(path, params: ParamSet, opt: OptState | None = None) -> None:
    """Versioned binary checkpoint: header, shape table, float64 LE payload.

    Parameter arrays come first, then the optimizer mean-square accumulators
    (zeros when no OptState is given), in layout order.
    """
    if opt is None:
        opt = OptState.for_params(params)
    entries = [(name, params.arrays[name]) for name in PARAM_ORDER]
    entries += [(f"opt/{name}", opt.mean_square[name]) for name in PARAM_ORDER]
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", CHECKPOINT_VERSION, len(entries)))
        for name, arr in entries:
            raw = name.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        for _, arr in entries:
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ParamSet, OptState]:
    with open(path, "rb") as f:
        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        version, n_entries = struct.unpack("<II", f.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        shapes: list[tuple[str, tuple[int, ...]]] = []
        for _ in range(n_entries):
            (name_len,) = struct.unpack("<H", f.read(2))
            name = f.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", f.read(1))
            shape = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
            shapes.append((name, shape))
        arrays: dict[str, np.ndarray] = {}
        for name, shape in shapes:
            count = int(np.prod(shape)) if shape else 1
            buf = f.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError("truncated checkpoint payload")
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    try:
        params = ParamSet({k: arrays[k] for k in PARAM_ORDER})
        mean_square = {k: arrays[f"opt/{k}"] for k in PARAM_ORDER}
    except KeyError as exc:
        raise ValueError(f"checkpoint missing array {exc}") from exc
    opt = OptState(mean_square=mean_square,
                   momentum_buf={k: np.zeros_like(v) for k, v in mean_square.items()})
    return params, opt

"""Run configuration: flat key=value files, typed defaults, validation.

Defaults follow the standard hyperparameter set for this training family
(RMSProp 7e-4 with decay 0.99, gradient clip 0.5, gamma 0.99, 20-step
segments, SIL batch 32 with 4 updates per iteration, replay capacity 1e5,
priority exponent 0.6).  Resolution order: built-in defaults, then the
config file, then explicit overrides.  Unknown keys are rejected by name.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .envs import make_env
from .net import LossWeights
from .transform import TBConfig

MODES = ("baseline", "lider", "lider_addall", "lider_onebuffer",
         "lider_sampler", "lider_ta", "lider_bc")

FULL_SCALE_ACTORS = 16  # baseline actor count at scale 1; refresher swaps one out


@dataclass
class RunConfig:
    mode: str = "baseline"
    env: str = "chain"
    chain_n: int = 20
    grid_width: int = 5
    grid_height: int = 5
    grid_pellets: int = 3
    grid_layout_seed: int = 0
    seed: int = 0
    total_steps: int = 200_000        # global environment-step budget
    scale: int = 1                    # divides the actor count for desk runs
    lr: float = 7e-4
    rmsprop_decay: float = 0.99
    rmsprop_eps: float = 1e-5
    rmsprop_momentum: float = 0.0
    grad_clip: float = 0.5
    gamma: float = 0.99
    tb_epsilon: float = 1e-2
    beta_a3c: float = 0.01            # entropy regularizer weight
    alpha: float = 0.5                # value-loss weight
    beta_sil: float = 0.1             # SIL value-loss weight
    t_max: int = 20                   # actor segment length (n-step bound)
    sil_updates: int = 4              # SIL updates per worker iteration
    batch_size: int = 32
    buffer_capacity: int = 100_000
    priority_exponent: float = 0.6
    priority_floor: float = 1e-6
    priority_refresh: bool = True     # re-prioritize sampled entries after SIL updates
    shared_rmsprop: bool = True       # share optimizer statistics across workers
    refresher_greedy: bool = False    # refresher samples from pi unless set
    reduce_sil: bool = False          # gate SIL updates to even global steps
    eval_interval: int = 5_000
    eval_episodes: int = 20
    checkpoint_interval: int = 50_000
    policy_path: str = ""             # frozen refresher policy for ta/bc modes
    threaded: bool = False            # real threads instead of the deterministic scheduler

    # ------------------------------------------------------------ validation

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode: unknown mode {self.mode!r}; expected one of {MODES}")
        if self.env not in ("chain", "grid"):
            raise ValueError(f"env: unknown environment family {self.env!r}")
        if self.mode in ("lider_ta", "lider_bc") and not self.policy_path:
            raise ValueError(f"policy_path: required for mode {self.mode}")
        for key in ("chain_n", "grid_width", "grid_height", "scale", "t_max",
                    "sil_updates", "batch_size", "buffer_capacity", "eval_interval",
                    "eval_episodes", "checkpoint_interval"):
            if getattr(self, key) < 1:
                raise ValueError(f"{key}: must be >= 1")
        if self.total_steps < 0:
            raise ValueError("total_steps: must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma: must be in [0, 1]")
        if self.tb_epsilon < 0:
            raise ValueError("tb_epsilon: must be >= 0")
        if self.priority_floor <= 0:
            raise ValueError("priority_floor: must be > 0")

    # ------------------------------------------------------------ derived

    @property
    def two_buffer(self) -> bool:
        """Modes that keep refresher data in a second prioritized buffer."""
        return self.mode in ("lider", "lider_addall", "lider_sampler",
                             "lider_ta", "lider_bc")

    @property
    def has_refresher(self) -> bool:
        return self.mode != "baseline"

    @property
    def actor_count(self) -> int:
        """Actor workers after scaling; a refresher replaces one actor."""
        base = max(2, FULL_SCALE_ACTORS // self.scale)
        return base - 1 if self.has_refresher else base

    @property
    def d_capacity(self) -> int:
        return self.buffer_capacity * 2 if self.mode == "lider_onebuffer" \
            else self.buffer_capacity

    def tb(self) -> TBConfig:
        return TBConfig(epsilon=self.tb_epsilon, gamma=self.gamma)

    def loss_weights(self) -> LossWeights:
        return LossWeights(alpha=self.alpha, beta_a3c=self.beta_a3c,
                           beta_sil=self.beta_sil)

    def env_factory(self):
        if self.env == "chain":
            n = self.chain_n
            return lambda: make_env("chain", n=n)
        w, h, p, ls = (self.grid_width, self.grid_height,
                       self.grid_pellets, self.grid_layout_seed)
        return lambda: make_env("grid", width=w, height=h, n_pellets=p, layout_seed=ls)


_FIELDS = {f.name: f.type for f in fields(RunConfig)}
_DEFAULTS = RunConfig()


def _parse_value(key: str, raw: str):
    kind = type(getattr(_DEFAULTS, key))
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ValueError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config(path: str | Path | None = None,
                 overrides: dict[str, str] | None = None) -> RunConfig:
    """Build a validated RunConfig; overrides beat the file, the file beats defaults."""
    values = {}
    if path is not None:
        text = Path(path).read_text()
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in _FIELDS:
                raise ValueError(f"unknown config key {key!r} (line {lineno})")
            values[key] = _parse_value(key, raw)
    for key, raw in (overrides or {}).items():
        if key not in _FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = _parse_value(key, raw) if isinstance(raw, str) else raw
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    """Flat key=value echo; re-parsing it reproduces the same RunConfig."""
    lines = ["# resolved run configuration"]
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"

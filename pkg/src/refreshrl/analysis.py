"""Training diagnostics, greedy evaluation, and the one-tailed Welch t-test.

Ratios that have an empty denominator are reported as None (and serialize
as empty CSV fields), never coerced to zero.  The t-distribution survival
function is computed from scratch via the regularized incomplete beta
function so runs do not depend on scipy; the test suite cross-checks it
against scipy as an independent oracle.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .net import ParamSet, forward

__all__ = [
    "RefreshStats", "UsageRecord", "MetricsCollector", "MetricsRow",
    "success_rate", "usage_ratios", "old_samples_used_ratio",
    "evaluate", "welch_one_tailed", "regularized_incomplete_beta", "student_t_sf",
]


@dataclass
class RefreshStats:
    """Refresher rollout tallies; return sums accumulate only on success."""

    rollouts: int = 0
    successes: int = 0
    sum_gnew: float = 0.0
    sum_g: float = 0.0

    def record(self, success: bool, gnew: float, g: float) -> None:
        self.rollouts += 1
        if success:
            self.successes += 1
            self.sum_gnew += gnew
            self.sum_g += g


@dataclass
class UsageRecord:
    """Per-update sample usage: who passed the positive-advantage gate."""

    positives_d: int
    positives_r: int
    batch_size: int
    used_refreshed: int = 0
    sum_g_used_d: float = 0.0
    sum_g_used_r: float = 0.0

    @property
    def positives(self) -> int:
        return self.positives_d + self.positives_r


def success_rate(stats: RefreshStats) -> float | None:
    """successes / rollouts, or None before any rollout happened."""
    if stats.rollouts == 0:
        return None
    return stats.successes / stats.rollouts


def usage_ratios(record: UsageRecord) -> tuple[float, float, float | None, float | None]:
    """(batch_ratio_D, batch_ratio_R, sil_ratio_D, sil_ratio_R).

    Batch ratios divide by batch size; the SIL ratios divide by the number
    of positive samples and are None when there were none.
    """
    if record.batch_size <= 0:
        raise ValueError("batch_size must be positive")
    batch_d = record.positives_d / record.batch_size
    batch_r = record.positives_r / record.batch_size
    if record.positives == 0:
        return batch_d, batch_r, None, None
    return (batch_d, batch_r,
            record.positives_d / record.positives,
            record.positives_r / record.positives)


def old_samples_used_ratio(record: UsageRecord) -> float | None:
    """Share of used (positive) samples whose entry had already been refreshed."""
    if record.positives == 0:
        return None
    return record.used_refreshed / record.positives


def evaluate(params: ParamSet, env_factory, episodes: int, seed: int = 0):
    """Greedy (argmax) rollouts on fresh environments; raw episodic rewards.

    Argmax ties break toward the lowest action index.  Returns
    (mean, std, rewards); std is the population deviation, 0 for one episode.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    del seed  # greedy policy on deterministic environments; kept for interface parity
    rewards = []
    for _ in range(episodes):
        env = env_factory()
        state = env.reset()
        total = 0.0
        while True:
            probs, _ = forward(params, state.features)
            res = env.step(int(np.argmax(probs)))
            total += res.reward
            state = res.state
            if res.terminal:
                break
        rewards.append(total)
    arr = np.asarray(rewards)
    return float(arr.mean()), float(arr.std()), rewards


# --------------------------------------------------------------- Welch t-test


def _betacf(x: float, a: float, b: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    frac = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        frac *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        frac *= delta
        if abs(delta - 1.0) < 1e-15:
            return frac
    raise RuntimeError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(x, a, b) / a
    return 1.0 - front * _betacf(1.0 - x, b, a) / b


def student_t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(x, df / 2.0, 0.5)
    return tail if t >= 0 else 1.0 - tail


def welch_one_tailed(sample_a, sample_b) -> tuple[float, float, float]:
    """Welch's t-test of mean(a) > mean(b), equal variances not assumed.

    Returns (t, Welch-Satterthwaite df, one-tailed p).
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 observations")
    va = float(a.var(ddof=1))
    vb = float(b.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        raise ValueError("both samples have zero variance; t is undefined")
    sa, sb = va / a.size, vb / b.size
    t = (float(a.mean()) - float(b.mean())) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    return t, df, student_t_sf(t, df)


# --------------------------------------------------------------- collector


@dataclass
class MetricsRow:
    """One windowed metrics line; None marks an undefined field."""

    global_step: int
    success_rate: float | None
    mean_gnew: float | None
    mean_g: float | None
    old_used_ratio: float | None
    batch_ratio_d: float | None
    batch_ratio_r: float | None
    sil_ratio_d: float | None
    sil_ratio_r: float | None
    used_return_d: float | None
    used_return_r: float | None


@dataclass
class _Window:
    refresh: RefreshStats = field(default_factory=RefreshStats)
    updates: int = 0
    sum_batch_d: float = 0.0
    sum_batch_r: float = 0.0
    sil_defined: int = 0
    sum_sil_d: float = 0.0
    sum_sil_r: float = 0.0
    used_d: int = 0
    used_r: int = 0
    sum_g_used_d: float = 0.0
    sum_g_used_r: float = 0.0
    used_refreshed: int = 0


class MetricsCollector:
    """Serialized intake for worker-submitted diagnostics, flushed per window.

    Workers never share counters; every submission happens under one lock,
    and ``flush`` emits the window means and restarts the window.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._win = _Window()
        self.lifetime_refresh = RefreshStats()

    def record_rollout(self, success: bool, gnew: float, g: float) -> None:
        with self._lock:
            self._win.refresh.record(success, gnew, g)
            self.lifetime_refresh.record(success, gnew, g)

    def record_sil_update(self, rec: UsageRecord) -> None:
        with self._lock:
            w = self._win
            w.updates += 1
            batch_d, batch_r, sil_d, sil_r = usage_ratios(rec)
            w.sum_batch_d += batch_d
            w.sum_batch_r += batch_r
            if sil_d is not None:
                w.sil_defined += 1
                w.sum_sil_d += sil_d
                w.sum_sil_r += sil_r
            w.used_d += rec.positives_d
            w.used_r += rec.positives_r
            w.sum_g_used_d += rec.sum_g_used_d
            w.sum_g_used_r += rec.sum_g_used_r
            w.used_refreshed += rec.used_refreshed

    def flush(self, global_step: int) -> MetricsRow:
        with self._lock:
            w = self._win
            refresh = w.refresh
            used = w.used_d + w.used_r
            row = MetricsRow(
                global_step=global_step,
                success_rate=success_rate(refresh),
                mean_gnew=refresh.sum_gnew / refresh.successes if refresh.successes else None,
                mean_g=refresh.sum_g / refresh.successes if refresh.successes else None,
                old_used_ratio=w.used_refreshed / used if used else None,
                batch_ratio_d=w.sum_batch_d / w.updates if w.updates else None,
                batch_ratio_r=w.sum_batch_r / w.updates if w.updates else None,
                sil_ratio_d=w.sum_sil_d / w.sil_defined if w.sil_defined else None,
                sil_ratio_r=w.sum_sil_r / w.sil_defined if w.sil_defined else None,
                used_return_d=w.sum_g_used_d / w.used_d if w.used_d else None,
                used_return_r=w.sum_g_used_r / w.used_r if w.used_r else None,
            )
            self._win = _Window()
            return row

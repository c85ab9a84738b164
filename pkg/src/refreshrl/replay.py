"""Prioritized replay storage with sum-tree proportional sampling.

Entries are kept in a FIFO ring; each live entry has an effective priority
max(raw, floor) and the tree stores priority**alpha partial sums so batch
draws are O(log capacity).  Draws are stratified: total mass is split into
k equal segments with one uniform draw each (with replacement across
segments).  Stale entry ids (already evicted) are tolerated everywhere and
counted, never corrupting state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

__all__ = ["Experience", "PrioritizedBuffer", "SumTree", "mix_and_resample"]


@dataclass
class Experience:
    """One stored replay entry.

    ``g_return`` is the transformed Monte-Carlo return computed at episode
    end.  ``snapshot`` carries enough environment state to teleport back to
    this step; ``refreshed`` flips to True (once) when the refresher draws
    this entry.  ``insert_seq`` is assigned by the buffer on push.
    """

    features: np.ndarray
    action: int
    g_return: float
    refreshed: bool = False
    snapshot: Any = None
    insert_seq: int = -1


class SumTree:
    """Complete binary tree of partial sums over leaf masses."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        size = 1
        while size < capacity:
            size *= 2
        self.n_leaves = size
        self.nodes = np.zeros(2 * size, dtype=np.float64)  # nodes[1] is the root

    @property
    def total(self) -> float:
        return float(self.nodes[1])

    def set(self, leaf: int, mass: float) -> None:
        i = self.n_leaves + leaf
        delta = mass - self.nodes[i]
        while i >= 1:
            self.nodes[i] += delta
            i //= 2

    def get(self, leaf: int) -> float:
        return float(self.nodes[self.n_leaves + leaf])

    def find(self, mass: float) -> int:
        """Leaf index whose cumulative interval contains ``mass``."""
        i = 1
        while i < self.n_leaves:
            left = 2 * i
            if mass < self.nodes[left] or self.nodes[left + 1] == 0.0:
                i = left
            else:
                mass -= self.nodes[left]
                i = left + 1
        return i - self.n_leaves

    def audit_max_error(self) -> float:
        """Largest relative mismatch between any internal node and its children."""
        worst = 0.0
        for i in range(1, self.n_leaves):
            want = self.nodes[2 * i] + self.nodes[2 * i + 1]
            err = abs(self.nodes[i] - want) / max(abs(want), 1.0)
            worst = max(worst, err)
        return worst


class PrioritizedBuffer:
    """Capacity-bounded FIFO store with advantage-based proportional sampling."""

    def __init__(self, capacity: int, priority_exponent: float = 0.6,
                 priority_floor: float = 1e-6):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if priority_floor <= 0:
            raise ValueError("priority floor must be > 0")
        self.capacity = capacity
        self.alpha = priority_exponent
        self.floor = priority_floor
        self.tree = SumTree(capacity)
        self._entries: list[Experience | None] = [None] * capacity
        self._ids = np.full(capacity, -1, dtype=np.int64)  # insert_seq per slot
        self._priorities = np.zeros(capacity, dtype=np.float64)  # effective (floored)
        self._next_seq = 0
        self._size = 0
        self.stale_updates = 0

    def __len__(self) -> int:
        return self._size

    @property
    def total_mass(self) -> float:
        """Sum of priority**alpha over live entries (the tree root)."""
        return self.tree.total

    def _slot_of(self, entry_id: int) -> int | None:
        slot = entry_id % self.capacity
        if self._ids[slot] != entry_id:
            return None
        return slot

    def push(self, exp: Experience, priority: float) -> int:
        """Store with effective priority max(priority, floor); evicts FIFO when full."""
        if not np.isfinite(priority):
            raise ValueError("priority must be finite")
        entry_id = self._next_seq
        self._next_seq += 1
        slot = entry_id % self.capacity
        exp.insert_seq = entry_id
        self._entries[slot] = exp
        self._ids[slot] = entry_id
        eff = max(float(priority), self.floor)
        self._priorities[slot] = eff
        self.tree.set(slot, eff**self.alpha)
        if self._size < self.capacity:
            self._size += 1
        return entry_id

    def sample_batch(self, k: int, rng: np.random.Generator) -> list[tuple[int, Experience]]:
        """k stratified proportional draws (with replacement across segments)."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        if k < 1:
            raise ValueError("k must be >= 1")
        total = self.tree.total
        out = []
        seg = total / k
        for i in range(k):
            mass = (i + rng.random()) * seg
            slot = self.tree.find(min(mass, np.nextafter(total, 0.0)))
            exp = self._entries[slot]
            assert exp is not None
            out.append((int(self._ids[slot]), exp))
        return out

    def sample_uniform(self, rng: np.random.Generator) -> tuple[int, Experience]:
        """One uniform draw over live entries, ignoring priorities."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        slot = int(rng.integers(self._size)) if self._size < self.capacity \
            else int(rng.integers(self.capacity))
        exp = self._entries[slot]
        assert exp is not None
        return int(self._ids[slot]), exp

    def update_priority(self, entry_id: int, new_priority: float) -> None:
        """Re-prioritize a live entry; stale ids are ignored (counted)."""
        slot = self._slot_of(entry_id)
        if slot is None:
            self.stale_updates += 1
            return
        eff = max(float(new_priority), self.floor)
        self._priorities[slot] = eff
        self.tree.set(slot, eff**self.alpha)

    def mark_refreshed(self, entry_id: int) -> None:
        """Flip the refreshed flag (idempotent); stale ids are ignored."""
        slot = self._slot_of(entry_id)
        if slot is None:
            self.stale_updates += 1
            return
        entry = self._entries[slot]
        assert entry is not None
        entry.refreshed = True

    def priority_of(self, entry_id: int) -> float | None:
        slot = self._slot_of(entry_id)
        return None if slot is None else float(self._priorities[slot])

    def live_entries(self) -> list[Experience]:
        return [e for e in self._entries if e is not None]

    def audit_tree(self) -> float:
        """Max relative error between internal sums and both full recomputations."""
        recomputed = np.zeros(self.tree.n_leaves)
        for slot in range(self.capacity):
            if self._ids[slot] >= 0:
                recomputed[slot] = self._priorities[slot] ** self.alpha
        leaf_err = float(np.max(np.abs(recomputed - self.tree.nodes[self.tree.n_leaves:])
                                / np.maximum(np.abs(recomputed), 1.0)))
        return max(leaf_err, self.tree.audit_max_error())


def mix_and_resample(batch_d: list, batch_r: list, k: int,
                     rng: np.random.Generator) -> list[tuple[str, Any]]:
    """Pool two batches with equal priority and take k stratified draws.

    Returns k (source, element) pairs with source "D" or "R"; draws are with
    replacement across segments.
    """
    pool = [("D", e) for e in batch_d] + [("R", e) for e in batch_r]
    if not pool:
        raise ValueError("both input batches are empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(pool)
    idx = ((np.arange(k) + rng.random(k)) * (n / k)).astype(np.intp)
    return [pool[min(i, n - 1)] for i in idx]

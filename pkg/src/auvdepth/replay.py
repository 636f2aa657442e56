"""Experience cache with priority-proportional sampling.

Transitions are stored in a fixed-capacity ring (oldest evicted first).
Each entry carries a priority; sampling draws with replacement, each entry
with probability priority / total. Priorities live in the leaves of a
cumulative binary tree, so pushes, refreshes, and draws all cost O(log C).

The priority of a new transition is the magnitude of its one-step value
prediction error plus a small floor, so even perfectly predicted
transitions remain sampleable. A uniform mode forces every priority to one
through the same code path, which turns sampling into a uniform draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nets import Mlp, actor_forward, critic_forward

PRIORITY_FLOOR = 1e-3


@dataclass
class Experience:
    """One transition: state, applied control, successor cost, successor
    state, and whether the successor ended the episode. priority and index
    are filled in by the cache on push."""

    s: np.ndarray
    u: np.ndarray
    c: float
    s_next: np.ndarray
    terminal: bool = False
    priority: float = 0.0
    index: int = -1


class ReplayCache:
    """Ring buffer of transitions with a cumulative-priority index."""

    def __init__(self, capacity: int, obs_dim: int, gamma: float,
                 floor: float = PRIORITY_FLOOR, uniform: bool = False):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if floor <= 0.0:
            raise ValueError("priority floor must be positive")
        self.capacity = int(capacity)
        self.obs_dim = int(obs_dim)
        self.gamma = float(gamma)
        self.floor = float(floor)
        self.uniform = bool(uniform)
        self._obs = np.empty((capacity, obs_dim))
        self._next_obs = np.empty((capacity, obs_dim))
        self._act = np.empty((capacity, 2))
        self._cost = np.empty(capacity)
        self._term = np.zeros(capacity, dtype=bool)
        self._ids = np.full(capacity, -1, dtype=np.int64)
        # leaves at [capacity, 2*capacity); node i sums its two children
        self._tree = np.zeros(2 * capacity)
        self._pushes = 0

    def __len__(self) -> int:
        return min(self._pushes, self.capacity)

    @property
    def total_priority(self) -> float:
        return float(self._tree[1])

    def priority_of(self, index: int) -> float:
        slot = index % self.capacity
        if self._ids[slot] != index:
            raise KeyError(f"transition {index} is no longer cached")
        return float(self._tree[self.capacity + slot])

    def _set_leaf(self, slot: int, value: float) -> None:
        i = self.capacity + slot
        self._tree[i] = value
        i //= 2
        while i >= 1:
            self._tree[i] = self._tree[2 * i] + self._tree[2 * i + 1]
            i //= 2

    def _draw_slots(self, n: int, rng: np.random.Generator) -> np.ndarray:
        # vectorized root-to-leaf descent; leaves live at two depths when
        # the capacity is not a power of two, hence the per-row mask
        u = rng.uniform(0.0, self._tree[1], size=n) * (1.0 - 1e-12)
        idx = np.ones(n, dtype=np.int64)
        while True:
            internal = idx < self.capacity
            if not internal.any():
                break
            left = 2 * idx[internal]
            left_sum = self._tree[left]
            go_left = u[internal] < left_sum
            u[internal] = np.where(go_left, u[internal], u[internal] - left_sum)
            idx[internal] = np.where(go_left, left, left + 1)
        return idx - self.capacity


def push(cache: ReplayCache, e: Experience, critic: Mlp, actor: Mlp) -> None:
    """Store a transition, scoring it by the current networks.

    Priority = |c + gamma * Q(s', mu(s')) - Q(s, u)| + floor, with the
    bootstrap term dropped for terminal transitions. At capacity the oldest
    entry is evicted. e.priority and e.index are filled in.
    """
    s = np.asarray(e.s, dtype=float)
    s_next = np.asarray(e.s_next, dtype=float)
    if s.shape != (cache.obs_dim,) or s_next.shape != (cache.obs_dim,):
        raise ValueError(
            f"experience layout {s.shape}/{s_next.shape} does not match "
            f"cache layout ({cache.obs_dim},)")
    u = np.asarray(e.u, dtype=float)
    if cache.uniform:
        priority = 1.0
    else:
        target = e.c
        if not e.terminal:
            u_next = actor_forward(actor, s_next)
            target = e.c + cache.gamma * critic_forward(critic, s_next, u_next)
        delta = target - critic_forward(critic, s, u)
        priority = abs(delta) + cache.floor

    slot = cache._pushes % cache.capacity
    cache._obs[slot] = s
    cache._next_obs[slot] = s_next
    cache._act[slot] = u
    cache._cost[slot] = e.c
    cache._term[slot] = e.terminal
    cache._ids[slot] = cache._pushes
    cache._set_leaf(slot, priority)
    e.priority = priority
    e.index = cache._pushes
    cache._pushes += 1


def sample(cache: ReplayCache, n: int,
           rng: np.random.Generator) -> list[tuple[Experience, int]]:
    """Draw n transitions with replacement, proportional to priority."""
    if len(cache) == 0:
        raise ValueError("cannot sample from an empty cache")
    slots = cache._draw_slots(n, rng)
    out = []
    for slot in slots:
        idx = int(cache._ids[slot])
        out.append((Experience(
            s=cache._obs[slot].copy(),
            u=cache._act[slot].copy(),
            c=float(cache._cost[slot]),
            s_next=cache._next_obs[slot].copy(),
            terminal=bool(cache._term[slot]),
            priority=float(cache._tree[cache.capacity + slot]),
            index=idx,
        ), idx))
    return out


def sample_batch(cache: ReplayCache, n: int, rng: np.random.Generator):
    """Array view of a draw, for the training hot loop.

    Returns (ids, states, actions, costs, next_states, terminals); the
    arrays are copies, safe to hold across later pushes.
    """
    if len(cache) == 0:
        raise ValueError("cannot sample from an empty cache")
    slots = cache._draw_slots(n, rng)
    return (cache._ids[slots].copy(), cache._obs[slots].copy(),
            cache._act[slots].copy(), cache._cost[slots].copy(),
            cache._next_obs[slots].copy(), cache._term[slots].copy())


def refresh(cache: ReplayCache, indices, deltas) -> None:
    """Reset priorities to |delta| + floor for the given insertion indices.

    Indices whose slot has since been overwritten are skipped silently; a
    sampled batch may legitimately outlive some of its members.
    """
    indices = np.asarray(indices, dtype=np.int64)
    deltas = np.asarray(deltas, dtype=float)
    if indices.shape != deltas.shape:
        raise ValueError("indices and deltas must align")
    for idx, d in zip(indices, deltas):
        slot = int(idx) % cache.capacity
        if cache._ids[slot] != idx:
            continue
        cache._set_leaf(slot, 1.0 if cache.uniform else abs(d) + cache.floor)

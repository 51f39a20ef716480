"""Partition the rank universe into state groups and provide scoped random
streams plus pool-wide incoherent reductions.

Random streams are counter-based (Philox keyed by seed and a scope mix), so
ranks sharing a scope key draw identical sequences without communicating:
``pool`` streams agree across every rank, ``state`` streams across the ranks
of one group, ``local`` streams are per-rank.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .statevector import tree_sum_values
from .transport import TAG_GATHER, Transport, as_payload

_MASK64 = (1 << 64) - 1

SCOPE_POOL = "pool"
SCOPE_STATE = "state"
SCOPE_LOCAL = "local"
_SCOPE_IDS = {SCOPE_POOL: 1, SCOPE_STATE: 2, SCOPE_LOCAL: 3}


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass
class RandomStream:
    """Keyed, counter-based uniform stream.

    Generation is keyed by (seed, scope, scope_key, salt) and a 64-bit block
    counter; every call regenerates from the counter position and advances it
    by the draw count, so no key/counter pair is ever reused. ``salt`` splits
    substreams (per graph instance, per trajectory round) off a scope.
    """

    seed: int
    scope: str
    scope_key: int = 0
    salt: int = 0
    counter: int = 0

    def __post_init__(self) -> None:
        if self.scope not in _SCOPE_IDS:
            raise ValueError(f"unknown scope {self.scope!r}")

    def _key(self) -> list[int]:
        mix = _splitmix64(_SCOPE_IDS[self.scope])
        mix = _splitmix64(mix ^ (self.scope_key & _MASK64))
        mix = _splitmix64(mix ^ (self.salt & _MASK64))
        return [self.seed & _MASK64, mix]

    def split(self, salt: int) -> "RandomStream":
        """Fresh substream with an independent key; counter starts at zero."""
        return RandomStream(self.seed, self.scope, self.scope_key,
                            _splitmix64(self.salt ^ _splitmix64(salt)))

    def uniform(self, count: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        if not lo < hi:
            raise ValueError(f"need lo < hi, got [{lo}, {hi})")
        if count < 0:
            raise ValueError("negative draw count")
        bitgen = np.random.Philox(counter=[self.counter, 0, 0, 0], key=self._key())
        u = np.random.Generator(bitgen).random(count)
        self.counter += count
        return lo + u * (hi - lo)

    def normal(self, count: int, std: float = 1.0) -> np.ndarray:
        """Normal variates via the inverse CDF of uniform draws."""
        u = np.clip(self.uniform(count), 1e-300, None)
        return ndtri(u) * std


def uniform_randoms(stream: RandomStream, count: int, lo: float, hi: float) -> np.ndarray:
    return stream.uniform(count, lo, hi)


@dataclass(frozen=True)
class PoolLayout:
    """Disjoint contiguous rank groups, one independently evolving state each."""

    total_ranks: int
    num_states: int
    ranks_per_state: int

    @property
    def active_ranks(self) -> int:
        return self.num_states * self.ranks_per_state

    def group_of_rank(self, rank: int) -> int | None:
        if not (0 <= rank < self.total_ranks):
            raise ValueError(f"rank {rank} out of range")
        if rank >= self.active_ranks:
            return None
        return rank // self.ranks_per_state

    def state_rank_of_rank(self, rank: int) -> int | None:
        if self.group_of_rank(rank) is None:
            return None
        return rank % self.ranks_per_state

    def group_base(self, state: int) -> int:
        if not (0 <= state < self.num_states):
            raise ValueError(f"state {state} out of range")
        return state * self.ranks_per_state

    def is_idle(self, rank: int) -> bool:
        return self.group_of_rank(rank) is None


def build_pool(total_ranks: int, num_states: int) -> PoolLayout:
    """Assign contiguous power-of-two groups; leftover ranks stay idle."""
    if num_states < 1:
        raise ValueError("need at least one state")
    if num_states > total_ranks:
        raise ValueError(
            f"{num_states} states need at least {num_states} ranks, have {total_ranks}"
        )
    ratio = total_ranks // num_states
    ranks_per_state = 1 << (ratio.bit_length() - 1)
    return PoolLayout(total_ranks, num_states, ranks_per_state)


def incoherent_sum_over_pool(value: float, layout: PoolLayout,
                             transport: Transport | None) -> float:
    """Sum one already-group-reduced scalar per state; all ranks get the total.

    Group leaders feed world rank 0, which combines the per-state values in a
    fixed tree order and sends the total back to every rank (idle ranks
    included, so pool collectives stay uniform).
    """
    if transport is None or transport.world_size == 1:
        return float(value)
    rank = transport.rank
    root = 0
    if rank == root:
        values = [float(value)]
        for s in range(1, layout.num_states):
            leader = layout.group_base(s)
            values.append(float(transport.receive(leader)[0].real))
        total = tree_sum_values(values)
        payload = as_payload([total])
        for r in range(1, transport.world_size):
            transport.send(r, payload, tag=TAG_GATHER)
        return total
    if layout.state_rank_of_rank(rank) == 0:
        transport.send(root, as_payload([float(value)]), tag=TAG_GATHER)
    return float(transport.receive(root)[0].real)


def gather_state_values(value: float, layout: PoolLayout,
                        transport: Transport | None,
                        num_groups: int | None = None) -> np.ndarray | None:
    """Collect one scalar per state group at world rank 0, in group order.

    Returns the array on rank 0 and None elsewhere. ``num_groups`` limits the
    collection to the first groups (used when a round assigns work to fewer
    groups than exist).
    """
    count = layout.num_states if num_groups is None else num_groups
    if transport is None or transport.world_size == 1:
        return np.array([float(value)]) if count else np.zeros(0)
    rank = transport.rank
    if rank == 0:
        out = np.empty(count, dtype=np.float64)
        if count:
            out[0] = float(value)
        for s in range(1, count):
            out[s] = float(transport.receive(layout.group_base(s))[0].real)
        return out
    group = layout.group_of_rank(rank)
    if (group is not None and group < count
            and layout.state_rank_of_rank(rank) == 0):
        transport.send(0, as_payload([float(value)]), tag=TAG_GATHER)
    return None

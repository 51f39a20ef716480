"""Rank/offset index arithmetic, the pairwise half-buffer exchange for gates
on global qubits, controlled-gate routing, and deterministic group reductions.

All operations are collective over the active ranks of one state group: every
rank must enter them in the same order with the same arguments. Violations
surface as transport timeouts, not undefined behavior.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevector as sv
from .transport import (
    TAG_EXCHANGE,
    TAG_REDUCE,
    TAG_RETURN,
    Transport,
    as_payload,
)

# One message per exchange step unless a buffer exceeds this many amplitudes.
DEFAULT_CHUNK_AMPLITUDES = 1 << 26


@dataclass(frozen=True)
class RankTopology:
    """Group-level rank structure for one distributed state."""

    total_ranks: int
    num_qubits: int

    def __post_init__(self) -> None:
        if self.total_ranks < 1:
            raise ValueError("need at least one rank")
        if self.num_local_qubits < 1:
            raise ValueError(
                f"{self.total_ranks} ranks leave no local qubit for n={self.num_qubits}"
            )

    @property
    def rank_bits(self) -> int:
        return self.total_ranks.bit_length() - 1  # floor(log2(P))

    @property
    def effective_ranks(self) -> int:
        return 1 << self.rank_bits

    @property
    def num_local_qubits(self) -> int:
        return self.num_qubits - self.rank_bits

    def is_local(self, q: int) -> bool:
        if not (0 <= q < self.num_qubits):
            raise ValueError(f"qubit {q} out of range for n={self.num_qubits}")
        return q < self.num_local_qubits


def rank_and_offset(index: int, topology: RankTopology) -> tuple[int, int]:
    """Map a global amplitude index to (owning rank, local offset)."""
    if not (0 <= index < (1 << topology.num_qubits)):
        raise ValueError(f"index {index} out of range")
    m = topology.num_local_qubits
    return index >> m, index & ((1 << m) - 1)


def exchange_partner(rank: int, q: int, topology: RankTopology) -> int:
    """Partner rank for a gate on global qubit q; an involution."""
    if topology.is_local(q):
        raise ValueError(f"qubit {q} is local; no exchange partner")
    return rank ^ (1 << (q - topology.num_local_qubits))


class GroupComm:
    """Group-relative view of a world transport for one state group.

    Group ranks are the contiguous world ranks [base, base + size); all
    distribution code addresses peers by group-relative index.
    """

    def __init__(self, transport: Transport | None, base_rank: int, size: int):
        if size > 1 and transport is None:
            raise ValueError("multi-rank group needs a transport")
        self.transport = transport
        self.base_rank = base_rank
        self.size = size
        self.rank = 0 if transport is None else transport.rank - base_rank
        if not (0 <= self.rank < size):
            raise ValueError(
                f"world rank {transport.rank} outside group [{base_rank}, {base_rank + size})"
            )

    def send(self, dest: int, payload, tag: int = 0) -> None:
        self.transport.send(self.base_rank + dest, payload, tag=tag)

    def receive(self, src: int) -> np.ndarray:
        return self.transport.receive(self.base_rank + src)


def single_rank_comm() -> GroupComm:
    return GroupComm(None, 0, 1)


def _send_chunked(comm: GroupComm, dest: int, buf: np.ndarray, tag: int,
                  chunk: int) -> None:
    for start in range(0, buf.size, chunk):
        comm.send(dest, buf[start:start + chunk], tag=tag)


def _recv_chunked(comm: GroupComm, src: int, total: int, chunk: int) -> np.ndarray:
    out = np.empty(total, dtype=np.complex128)
    got = 0
    while got < total:
        part = comm.receive(src)
        out[got:got + part.size] = part
        got += part.size
    return out


def _exchange_pairs(partition: sv.StatePartition, comm: GroupComm, q: int,
                    u: np.ndarray, topology: RankTopology,
                    control_local: int | None = None,
                    chunk: int = DEFAULT_CHUNK_AMPLITUDES) -> None:
    """Three-step half-buffer exchange for a (possibly controlled) gate on a
    global qubit.

    Step 1: each rank sends half its buffer to the partner at rank distance
    2**(q-m); the lower partner sends its upper half, the higher its lower
    half, so each side ends up holding one full pair-set. Step 2: both update
    their pairs locally (restricted to offsets with the control bit set when
    ``control_local`` is given). Step 3: updated halves travel back.
    """
    m = topology.num_local_qubits
    rank = comm.rank
    distance = 1 << (q - m)
    partner = rank ^ distance
    psi = partition.amplitudes
    half = psi.size // 2
    is_lower = (rank & distance) == 0

    if is_lower:
        mine = psi[:half]
        outbound = psi[half:]
        offsets = np.arange(0, half)
    else:
        mine = psi[half:]
        outbound = psi[:half]
        offsets = np.arange(half, 2 * half)

    _send_chunked(comm, partner, outbound, TAG_EXCHANGE, chunk)
    other = _recv_chunked(comm, partner, half, chunk)

    # ``mine`` is the i_q = 0 side on the lower rank and the i_q = 1 side on
    # the higher; ``other`` is always the opposite side of the same pairs.
    if is_lower:
        a, b = (mine, other)
    else:
        a, b = (other, mine)

    if control_local is None:
        a_new, b_new = sv.pair_update(a, b, u)
    else:
        sel = np.nonzero((offsets >> control_local) & 1)[0]
        a_new = a.copy()
        b_new = b.copy()
        a_sel, b_sel = sv.pair_update(a[sel], b[sel], u)
        a_new[sel] = a_sel
        b_new[sel] = b_sel

    if is_lower:
        psi[:half] = a_new
        _send_chunked(comm, partner, b_new, TAG_RETURN, chunk)
        psi[half:] = _recv_chunked(comm, partner, half, chunk)
    else:
        psi[half:] = b_new
        _send_chunked(comm, partner, a_new, TAG_RETURN, chunk)
        psi[:half] = _recv_chunked(comm, partner, half, chunk)


def apply_one_qubit_gate(partition: sv.StatePartition | None, topology: RankTopology,
                         comm: GroupComm, q: int, u: np.ndarray,
                         chunk: int = DEFAULT_CHUNK_AMPLITUDES) -> sv.StatePartition | None:
    """Collective one-qubit gate: local kernel for q < m, exchange otherwise."""
    if not (0 <= q < topology.num_qubits):
        raise ValueError(f"qubit {q} out of range for n={topology.num_qubits}")
    if comm.rank >= topology.effective_ranks:
        return partition  # idle rank
    if topology.is_local(q):
        return sv.apply_local_one_qubit_gate(partition, q, u)
    _exchange_pairs(partition, comm, q, u, topology, chunk=chunk)
    return partition


def apply_controlled_gate(partition: sv.StatePartition | None, topology: RankTopology,
                          comm: GroupComm, control: int, target: int, u: np.ndarray,
                          chunk: int = DEFAULT_CHUNK_AMPLITUDES) -> sv.StatePartition | None:
    """Apply ``u`` to the target where the control qubit is |1>.

    Routing by locality: (a) both local -> masked local kernel, no messages;
    (b) control global, target local -> ranks whose rank-index bit selects
    control=1 run the plain local kernel; (c) control local, target global ->
    exchange with step-2 compute restricted to control=1 offsets; (d) both
    global -> only control=1 ranks exchange.
    """
    n, m = topology.num_qubits, topology.num_local_qubits
    if control == target:
        raise ValueError("control and target must differ")
    for q in (control, target):
        if not (0 <= q < n):
            raise ValueError(f"qubit {q} out of range for n={n}")
    if comm.rank >= topology.effective_ranks:
        return partition

    control_is_local = control < m
    target_is_local = target < m
    if control_is_local and target_is_local:
        return sv.apply_local_controlled_gate(partition, control, target, u)
    if not control_is_local:
        control_selected = (comm.rank >> (control - m)) & 1 == 1
        if not control_selected:
            return partition
        if target_is_local:
            return sv.apply_local_one_qubit_gate(partition, target, u)
        _exchange_pairs(partition, comm, target, u, topology, chunk=chunk)
        return partition
    # control local, target global
    _exchange_pairs(partition, comm, target, u, topology,
                    control_local=control, chunk=chunk)
    return partition


def group_reduce_sum(partial: float, topology: RankTopology, comm: GroupComm) -> float:
    """Sum one scalar per rank; every member gets the identical total.

    Recursive doubling pairs rank r with r XOR 2**k at step k, so the
    association is the same contiguous binary tree as :func:`sv.tree_sum`
    over the per-rank partials.
    """
    rank = comm.rank
    if rank >= topology.effective_ranks:
        return partial  # idle ranks hold no state and skip the exchange
    value = float(partial)
    for k in range(topology.rank_bits):
        partner = rank ^ (1 << k)
        comm.send(partner, as_payload([value]), tag=TAG_REDUCE)
        other = float(comm.receive(partner)[0].real)
        if rank & (1 << k):
            value = sv.combine_pair(other, value)
        else:
            value = sv.combine_pair(value, other)
    return value


def measure_probability(partition: sv.StatePartition, topology: RankTopology,
                        comm: GroupComm, q: int) -> float:
    """Group-complete probability of qubit q in |1>."""
    return group_reduce_sum(sv.get_probability(partition, q), topology, comm)


def measure_norm_squared(partition: sv.StatePartition, topology: RankTopology,
                         comm: GroupComm) -> float:
    return group_reduce_sum(sv.norm_squared(partition), topology, comm)


def measure_maxcut(partition: sv.StatePartition, topology: RankTopology,
                   comm: GroupComm, graph) -> float:
    return group_reduce_sum(sv.maxcut_expectation(partition, graph), topology, comm)


def measure_z(partition: sv.StatePartition, topology: RankTopology,
              comm: GroupComm, q: int) -> float:
    return group_reduce_sum(sv.z_expectation(partition, q), topology, comm)

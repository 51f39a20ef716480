"""Dense storage of one rank's state-vector slice and all purely local kernels.

A state of ``n`` qubits is a vector of ``2**n`` complex amplitudes indexed by
basis index ``i = sum_q i_q 2**q`` (qubit 0 is the least-significant bit).
Across a group of ``2**p`` ranks, rank ``r`` owns the contiguous slice of
global indices ``[r * 2**m, (r+1) * 2**m)`` with ``m = n - p`` local qubits,
so ``rank = i >> m`` and ``local offset = i & (2**m - 1)``.

Gates on qubits ``q < m`` touch only local amplitude pairs and are applied
here; gates on ``q >= m`` must be routed through the distribution module.

All observable accumulations go through :func:`tree_sum`, a fixed binary-tree
association that makes partial sums combine bit-identically across any rank
count and transport.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import graphs


class LocalityError(ValueError):
    """A kernel was asked to act on a qubit the local slice does not pair."""


def tree_sum(values: np.ndarray) -> float:
    """Sum a power-of-two-length array by halving pairwise.

    The association is a perfect binary tree over the element order, so the
    sum of a ``2**k``-block equals the tree combination of the sums of its
    two halves. Distributed reductions use the same tree over rank partials,
    which makes every observable independent of how the state is split.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    n = x.size
    if n == 0:
        return 0.0
    if n & (n - 1):
        raise ValueError(f"tree_sum requires power-of-two length, got {n}")
    while x.size > 1:
        x = x.reshape(-1, 2).sum(axis=1)
    return float(x[0])


def combine_pair(lo: float, hi: float) -> float:
    """One node of the reduction tree (kept explicit for the distributed path)."""
    return lo + hi


def tree_sum_values(values) -> float:
    """Tree-order sum of a plain sequence of scalars, any length.

    Splits at the largest power of two below the length, which coincides with
    :func:`tree_sum` for power-of-two lengths. Used as the canonical
    association for cross-group reductions.
    """
    vals = [float(v) for v in values]
    if not vals:
        return 0.0

    def _reduce(seq) -> float:
        k = len(seq)
        if k == 1:
            return seq[0]
        split = 1 << (k - 1).bit_length() - 1
        return combine_pair(_reduce(seq[:split]), _reduce(seq[split:]))

    return _reduce(vals)


@dataclass
class StatePartition:
    """One rank's slice of ``2**(n-p)`` amplitudes plus layout metadata."""

    num_qubits: int
    num_local_qubits: int
    rank_index: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        n, m, r = self.num_qubits, self.num_local_qubits, self.rank_index
        if not (0 < m <= n):
            raise ValueError(f"need 0 < num_local_qubits <= num_qubits, got m={m}, n={n}")
        if not (0 <= r < (1 << (n - m))):
            raise ValueError(f"rank_index {r} out of range for {n - m} rank bits")
        if self.amplitudes.shape != (1 << m,):
            raise ValueError(
                f"amplitude slice must have length 2**{m}, got {self.amplitudes.shape}"
            )
        if self.amplitudes.dtype != np.complex128:
            raise ValueError("amplitudes must be complex128")

    @property
    def num_rank_bits(self) -> int:
        return self.num_qubits - self.num_local_qubits

    @property
    def global_offset(self) -> int:
        """Global index of local offset 0."""
        return self.rank_index << self.num_local_qubits

    def owned_indices(self) -> np.ndarray:
        """Global basis indices owned by this rank, ascending."""
        base = self.global_offset
        return np.arange(base, base + self.amplitudes.size, dtype=np.uint64)


def allocate_partition(num_qubits: int, num_local_qubits: int | None = None,
                       rank_index: int = 0) -> StatePartition:
    m = num_qubits if num_local_qubits is None else num_local_qubits
    amps = np.zeros(1 << m, dtype=np.complex128)
    return StatePartition(num_qubits, m, rank_index, amps)


def full_state_bytes(num_qubits: int) -> int:
    """Memory for the full 2**n-amplitude state: 2 doubles of 8 bytes each."""
    return 1 << (3 + 1 + num_qubits)


def init_basis_state(partition: StatePartition, index: int) -> StatePartition:
    """Set the state to computational basis state ``index``.

    Each rank writes only the slice it owns; at most one rank holds the
    nonzero amplitude.
    """
    if not (0 <= index < (1 << partition.num_qubits)):
        raise ValueError(f"basis index {index} out of range for {partition.num_qubits} qubits")
    partition.amplitudes[:] = 0.0
    m = partition.num_local_qubits
    if (index >> m) == partition.rank_index:
        partition.amplitudes[index & ((1 << m) - 1)] = 1.0
    return partition


def init_uniform(partition: StatePartition) -> StatePartition:
    """Balanced superposition of all computational states."""
    partition.amplitudes[:] = 2.0 ** (-partition.num_qubits / 2.0)
    return partition


def pair_update(a: np.ndarray, b: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Apply a 2x2 matrix to amplitude pairs ``(a[k], b[k])`` elementwise.

    This exact expression is shared by the local kernel and the distributed
    exchange so that both paths produce identical floating-point results.
    """
    return u[0, 0] * a + u[0, 1] * b, u[1, 0] * a + u[1, 1] * b


def _pair_indices(size: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Local index pairs differing only in bit q, ascending lower index."""
    step = 1 << q
    block = step << 1
    base = np.arange(0, size, block)
    lo = (base[:, None] + np.arange(step)[None, :]).ravel()
    return lo, lo + step


def apply_local_one_qubit_gate(partition: StatePartition, q: int,
                               u: np.ndarray) -> StatePartition:
    """Update amplitude pairs for a gate on local qubit ``q`` (zero messages)."""
    if q >= partition.num_local_qubits:
        raise LocalityError(
            f"qubit {q} is global for m={partition.num_local_qubits}; "
            "route through the distribution module"
        )
    if q < 0:
        raise ValueError("negative qubit index")
    psi = partition.amplitudes
    lo, hi = _pair_indices(psi.size, q)
    a, b = pair_update(psi[lo], psi[hi], u)
    psi[lo] = a
    psi[hi] = b
    return partition


def apply_local_controlled_gate(partition: StatePartition, control: int, target: int,
                                u: np.ndarray) -> StatePartition:
    """Apply ``u`` to target pairs where the (local) control bit is 1."""
    m = partition.num_local_qubits
    if control == target:
        raise ValueError("control and target must differ")
    if control >= m or target >= m:
        raise LocalityError("both qubits must be local for the local controlled kernel")
    psi = partition.amplitudes
    idx = np.arange(psi.size)
    lo = idx[((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)]
    hi = lo | (1 << target)
    a, b = pair_update(psi[lo], psi[hi], u)
    psi[lo] = a
    psi[hi] = b
    return partition


def apply_diagonal_phase(partition: StatePartition, phases) -> StatePartition:
    """Multiply each owned amplitude by ``exp(-1j * phases(i))``.

    ``phases`` receives the rank's owned global indices as a uint64 array and
    must return the corresponding angles; no communication happens.
    """
    angles = np.asarray(phases(partition.owned_indices()), dtype=np.float64)
    partition.amplitudes *= np.exp(-1j * angles)
    return partition


def norm_squared(partition: StatePartition) -> float:
    """This rank's contribution to the squared L2 norm (tree order)."""
    a = partition.amplitudes
    return tree_sum(a.real * a.real + a.imag * a.imag)


def get_probability(partition: StatePartition, q: int) -> float:
    """Partial sum of |amplitude|^2 over owned indices with bit ``q`` set.

    At p=0 this is the full probability of measuring qubit ``q`` in |1>; for
    distributed states the group reduction completes it.
    """
    n, m = partition.num_qubits, partition.num_local_qubits
    if not (0 <= q < n):
        raise ValueError(f"qubit {q} out of range")
    a = partition.amplitudes
    if q >= m:
        if (partition.rank_index >> (q - m)) & 1:
            return norm_squared(partition)
        return 0.0
    idx = np.arange(a.size)
    sel = a[(idx >> q) & 1 == 1]
    return tree_sum(sel.real * sel.real + sel.imag * sel.imag)


def z_expectation(partition: StatePartition, q: int) -> float:
    """Partial <Z_q> contribution: 1 - 2 * probability, restricted to owned indices."""
    # (-1)**bit weighting over the owned slice; completes under the same reduction.
    n, m = partition.num_qubits, partition.num_local_qubits
    if not (0 <= q < n):
        raise ValueError(f"qubit {q} out of range")
    a = partition.amplitudes
    weights = np.where((partition.owned_indices() >> np.uint64(q)) & np.uint64(1), -1.0, 1.0)
    return tree_sum(weights * (a.real * a.real + a.imag * a.imag))


def maxcut_expectation(partition: StatePartition, graph) -> float:
    """Partial sum of |amplitude|^2 times the cut count of each owned index."""
    if graph.num_vertices > partition.num_qubits:
        raise ValueError("graph vertices exceed qubit count")
    cuts = graphs.cut_counts(graph, partition.owned_indices())
    a = partition.amplitudes
    return tree_sum(cuts * (a.real * a.real + a.imag * a.imag))

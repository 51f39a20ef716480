"""Per-rank execution contexts and collective circuit execution.

A :class:`RankContext` bundles what one rank needs: its transport endpoint,
the pool layout, its group communicator, its state slice, and the three
scoped random streams. ``run_spmd`` drives one worker thread per rank with an
in-process fabric; socket deployments build one context per OS process.

All execution entry points are collective: every active rank must call them
in the same order with the same arguments.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace

import numpy as np

from . import distribution as dist
from . import gates
from . import graphs as graphs_mod
from . import statevector as sv
from .circuit import Circuit, GateSpec
from .noise import NoiseModel, noise_gate_matrix
from .pool import (
    SCOPE_LOCAL,
    SCOPE_POOL,
    SCOPE_STATE,
    PoolLayout,
    RandomStream,
    build_pool,
    gather_state_values,
    incoherent_sum_over_pool,
)
from .transport import InProcessFabric, Transport, broadcast_array

NORM_CHECK_INTERVAL = 100
NORM_TOL = 1e-10


class NormDriftError(RuntimeError):
    """The running state stopped being normalized; a gate was not unitary."""


@dataclass
class RankContext:
    transport: Transport | None
    layout: PoolLayout
    num_qubits: int
    seed: int
    noise_model: NoiseModel | None = None
    norm_check_interval: int = NORM_CHECK_INTERVAL
    # populated in __post_init__
    world_rank: int = field(init=False)
    group: int | None = field(init=False)
    state_rank: int | None = field(init=False)
    topology: dist.RankTopology = field(init=False)
    comm: dist.GroupComm | None = field(init=False)
    partition: sv.StatePartition | None = field(init=False)
    pool_stream: RandomStream = field(init=False)
    state_stream: RandomStream | None = field(init=False)
    local_stream: RandomStream = field(init=False)
    gates_applied: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        self.world_rank = 0 if self.transport is None else self.transport.rank
        self.group = self.layout.group_of_rank(self.world_rank)
        self.state_rank = self.layout.state_rank_of_rank(self.world_rank)
        self.topology = dist.RankTopology(self.layout.ranks_per_state, self.num_qubits)
        self.pool_stream = RandomStream(self.seed, SCOPE_POOL, 0)
        self.local_stream = RandomStream(self.seed, SCOPE_LOCAL, self.world_rank)
        if self.group is None:
            self.comm = None
            self.partition = None
            self.state_stream = None
            return
        self.comm = dist.GroupComm(
            self.transport, self.layout.group_base(self.group), self.layout.ranks_per_state
        )
        self.state_stream = RandomStream(self.seed, SCOPE_STATE, self.group)
        self.partition = sv.allocate_partition(
            self.num_qubits, self.topology.num_local_qubits, self.state_rank
        )
        sv.init_basis_state(self.partition, 0)

    @property
    def is_idle(self) -> bool:
        return self.group is None


def make_context(transport: Transport | None, num_qubits: int, num_states: int = 1,
                 seed: int = 0, noise_model: NoiseModel | None = None) -> RankContext:
    world = 1 if transport is None else transport.world_size
    layout = build_pool(world, num_states)
    if layout.ranks_per_state >= (1 << num_qubits):
        raise ValueError(
            f"{layout.ranks_per_state} ranks per state leave no local qubit "
            f"for n={num_qubits}"
        )
    return RankContext(transport, layout, num_qubits, seed, noise_model)


def reset_state(ctx: RankContext, index: int = 0) -> None:
    """(Re)initialize every pool state to a computational basis state."""
    if not ctx.is_idle:
        sv.init_basis_state(ctx.partition, index)
    ctx.gates_applied = 0


def _resolved_angle(gate: GateSpec) -> float:
    if isinstance(gate.param, str):
        raise ValueError(f"gate {gate.kind} has unbound slot {gate.param}")
    return float(gate.param)


def apply_gate(ctx: RankContext, gate: GateSpec,
               noise_stream: RandomStream | None = None) -> None:
    """Apply one gate to this rank's slice (collective within the group)."""
    if ctx.is_idle:
        return
    part, topo, comm = ctx.partition, ctx.topology, ctx.comm
    kind = gate.kind
    if kind == "noise":
        if ctx.noise_model is None:
            raise ValueError("noise gate requires a noise model on the context")
        stream = ctx.state_stream if noise_stream is None else noise_stream
        u = noise_gate_matrix(gate.duration, ctx.noise_model, stream)
        dist.apply_one_qubit_gate(part, topo, comm, gate.qubits[0], u)
    elif kind == "diagcost":
        gamma = _resolved_angle(gate)
        graph = gate.graph
        sv.apply_diagonal_phase(
            part, lambda idx: gamma * graphs_mod.cut_counts(graph, idx)
        )
    elif kind in ("cx", "cz"):
        u = gates.PAULI_X if kind == "cx" else gates.PAULI_Z
        dist.apply_controlled_gate(part, topo, comm, gate.qubits[0], gate.qubits[1], u)
    elif kind == "custom":
        dist.apply_one_qubit_gate(part, topo, comm, gate.qubits[0],
                                  gates.gate_matrix(gate.matrix))
    elif kind in ("rx", "ry", "rz"):
        u = gates.ROTATION_GATES[kind](_resolved_angle(gate))
        dist.apply_one_qubit_gate(part, topo, comm, gate.qubits[0], u)
    else:
        dist.apply_one_qubit_gate(part, topo, comm, gate.qubits[0],
                                  gates.FIXED_GATES[kind])
    ctx.gates_applied += 1
    if ctx.norm_check_interval and ctx.gates_applied % ctx.norm_check_interval == 0:
        norm_sq = dist.measure_norm_squared(part, topo, comm)
        if abs(norm_sq - 1.0) >= NORM_TOL:
            raise NormDriftError(
                f"norm^2 drifted to {norm_sq!r} after {ctx.gates_applied} gates"
            )


def run_circuit(ctx: RankContext, circuit: Circuit,
                bindings: dict[str, float] | None = None,
                noise_stream: RandomStream | None = None) -> None:
    """Execute a circuit on this rank's state (same bindings for every group)."""
    bound = circuit.bind(bindings) if bindings else circuit
    bound.require_bound()
    for gate in bound.gates:
        apply_gate(ctx, gate, noise_stream=noise_stream)


def _broadcast_tables(ctx: RankContext, slot_tables: dict[str, "np.ndarray"]):
    """Share per-state parameter tables from world rank 0, once per circuit."""
    if ctx.transport is None or ctx.transport.world_size == 1:
        return slot_tables
    names = sorted(slot_tables)
    stacked = np.array([np.asarray(slot_tables[k], dtype=np.float64) for k in names])
    out = broadcast_array(ctx.transport, stacked).real.reshape(stacked.shape)
    return {k: out[i] for i, k in enumerate(names)}


def apply_gate_pool(ctx: RankContext, gate: GateSpec,
                    param_table=None) -> None:
    """Apply a gate to every pool state; group s binds table entry s."""
    if param_table is None:
        apply_gate(ctx, gate)
        return
    if len(param_table) != ctx.layout.num_states:
        raise ValueError(
            f"parameter table has {len(param_table)} entries for "
            f"{ctx.layout.num_states} states"
        )
    table = _broadcast_tables(ctx, {"value": np.asarray(param_table, dtype=np.float64)})
    if ctx.is_idle:
        return
    apply_gate(ctx, replace(gate, param=float(table["value"][ctx.group])))


def run_circuit_pool(ctx: RankContext, circuit: Circuit,
                     slot_tables: dict[str, "np.ndarray"] | None = None,
                     noise_stream: RandomStream | None = None) -> None:
    """Execute a circuit on every pool state with per-state slot values."""
    if not slot_tables:
        run_circuit(ctx, circuit, noise_stream=noise_stream)
        return
    for name, values in slot_tables.items():
        if len(values) != ctx.layout.num_states:
            raise ValueError(
                f"table for ${name} has {len(values)} entries for "
                f"{ctx.layout.num_states} states"
            )
    tables = _broadcast_tables(ctx, slot_tables)
    if ctx.is_idle:
        return
    bindings = {name: float(vals[ctx.group]) for name, vals in tables.items()}
    run_circuit(ctx, circuit, bindings, noise_stream=noise_stream)


def measure_probability(ctx: RankContext, q: int) -> float:
    if ctx.is_idle:
        return 0.0
    return dist.measure_probability(ctx.partition, ctx.topology, ctx.comm, q)


def measure_maxcut(ctx: RankContext, graph) -> float:
    if ctx.is_idle:
        return 0.0
    return dist.measure_maxcut(ctx.partition, ctx.topology, ctx.comm, graph)


def measure_z(ctx: RankContext, q: int) -> float:
    if ctx.is_idle:
        return 0.0
    return dist.measure_z(ctx.partition, ctx.topology, ctx.comm, q)


def pool_sum(ctx: RankContext, value: float) -> float:
    """Incoherent sum of one group-reduced scalar per state; same on all ranks."""
    return incoherent_sum_over_pool(value, ctx.layout, ctx.transport)


def pool_gather(ctx: RankContext, value: float, num_groups: int | None = None):
    return gather_state_values(value, ctx.layout, ctx.transport, num_groups)


def gather_group_state(ctx: RankContext, group: int = 0) -> np.ndarray | None:
    """Assemble one group's full amplitude vector on world rank 0."""
    if ctx.transport is None or ctx.transport.world_size == 1:
        return ctx.partition.amplitudes.copy()
    base = ctx.layout.group_base(group)
    size = ctx.layout.ranks_per_state
    rank = ctx.world_rank
    if rank == 0:
        pieces = [None] * size
        if base == 0:
            pieces[0] = ctx.partition.amplitudes
        for r in range(size):
            world = base + r
            if world == 0:
                continue
            pieces[r] = ctx.transport.receive(world)
        return np.concatenate(pieces)
    if base <= rank < base + size:
        ctx.transport.send(0, ctx.partition.amplitudes)
    return None


def run_spmd(world_size: int, fn, timeout: float = 30.0) -> list:
    """Run ``fn(transport)`` on one worker thread per rank; results by rank."""
    if world_size == 1:
        fabric = InProcessFabric(1, timeout=timeout)
        return [fn(fabric.endpoint(0))]
    fabric = InProcessFabric(world_size, timeout=timeout)
    results: list = [None] * world_size
    failures: list[tuple[int, BaseException]] = []
    lock = threading.Lock()

    def worker(rank: int) -> None:
        try:
            results[rank] = fn(fabric.endpoint(rank))
        except BaseException as exc:  # propagate to the caller
            with lock:
                failures.append((rank, exc))

    threads = [threading.Thread(target=worker, args=(r,), daemon=True)
               for r in range(world_size)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failures:
        failures.sort(key=lambda pair: pair[0])
        rank, exc = failures[0]
        raise RuntimeError(f"rank {rank} failed: {exc!r}") from exc
    return results


def simulate_circuit(circuit: Circuit, num_ranks: int = 1, num_states: int = 1,
                     seed: int = 0, noise_model: NoiseModel | None = None,
                     bindings: dict[str, float] | None = None,
                     timeout: float = 30.0) -> np.ndarray:
    """Convenience: run a circuit and return group 0's full state vector."""

    def rank_fn(transport):
        ctx = make_context(transport, circuit.num_qubits, num_states, seed, noise_model)
        run_circuit(ctx, circuit, bindings)
        return gather_group_state(ctx)

    return run_spmd(num_ranks, rank_fn, timeout=timeout)[0]

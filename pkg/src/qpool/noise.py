"""Stochastic T1/T2 noise as random one-qubit rotations.

Each noise gate of duration d applies Rx(tx), then Ry(ty), then Rz(tz) with

    tx, ty ~ Normal(0, d / T1)
    tz     ~ Normal(0, 2 d (1/T2 - 1/(2 T1)))

Averaging unitary trajectories then reproduces <Z> ~ exp(-t/T1) and
<X> ~ exp(-t/T2) exactly, because E[cos t] = exp(-var/2) for a centered
Gaussian angle. Every trajectory stays normalized, so incoherent averages
need no renormalization. This unital model decays <Z> toward 0 rather than
toward the ground state; that is the known limitation of rotation-based
unraveling.

Angles are drawn from a state-scope stream so all ranks of a group agree on
them without communication; three normals are consumed per noise gate, in
the fixed order (tx, ty, tz).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gates
from . import statevector as sv
from .circuit import Circuit, GateSpec
from .pool import SCOPE_STATE, RandomStream


@dataclass(frozen=True)
class NoiseModel:
    """Relaxation (t1) and dephasing (t2) timescales, in units of gate time."""

    t1: float
    t2: float

    def __post_init__(self) -> None:
        if not (self.t1 > 0 and self.t2 > 0):
            raise ValueError("timescales must be positive")
        if self.t2 > 2 * self.t1:
            raise ValueError(
                f"t2 ={self.t2} exceeds 2*t1 ={2 * self.t1}; "
                "pure-dephasing rate would be negative"
            )

    def variances(self, duration: float) -> tuple[float, float]:
        """(var_xy, var_z) accumulated over ``duration`` gate times."""
        if duration < 0:
            raise ValueError("negative noise duration")
        var_xy = duration / self.t1
        var_z = 2.0 * duration * (1.0 / self.t2 - 1.0 / (2.0 * self.t1))
        return var_xy, var_z


NOISELESS = NoiseModel(math.inf, math.inf)


def trajectory_stream(seed: int, trajectory_index: int) -> RandomStream:
    """State-scope stream identifying one stochastic trajectory.

    Keyed by the trajectory index alone, so an ensemble is independent of how
    trajectories are spread over pool groups: trajectory t on any layout
    equals a serial single-rank run with the same index, bit-exactly. The
    first pool round (t < num_states) coincides with the plain state-scope
    streams of the groups.
    """
    return RandomStream(seed, SCOPE_STATE, scope_key=trajectory_index)


def noise_gate_matrix(duration: float, model: NoiseModel,
                      stream: RandomStream) -> np.ndarray:
    """One stochastic rotation, combined into a single 2x2 unitary."""
    var_xy, var_z = model.variances(duration)
    draws = stream.normal(3)
    tx = draws[0] * math.sqrt(var_xy)
    ty = draws[1] * math.sqrt(var_xy)
    tz = draws[2] * math.sqrt(var_z)
    # Rx acts first, so it sits rightmost in the matrix product.
    return gates.rz(tz) @ gates.ry(ty) @ gates.rx(tx)


def apply_noise_gate(partition: sv.StatePartition, q: int, duration: float,
                     model: NoiseModel, stream: RandomStream) -> sv.StatePartition:
    """Single-rank noise gate; distributed circuits route the same matrix
    through the distribution module instead."""
    return sv.apply_local_one_qubit_gate(
        partition, q, noise_gate_matrix(duration, model, stream)
    )


def _touched_qubits(gate: GateSpec) -> tuple[int, ...]:
    if gate.kind == "diagcost":
        return tuple(range(gate.graph.num_vertices))
    return tuple(sorted(gate.qubits))


def schedule_noise(circuit: Circuit, model: NoiseModel | None = None) -> Circuit:
    """Insert noise gates covering each qubit's elapsed time.

    Gates run back-to-back in circuit order. Before each gate, every touched
    qubit gets a noise gate spanning from its last covered instant through
    the end of the gate; after a qubit's final gate it gets one more noise
    gate spanning from that gate's start to the end of the circuit. Qubits
    with no gates accrue one noise gate for the whole circuit duration.
    """
    if not circuit.gates:
        return circuit
    for g in circuit.gates:
        if g.kind == "noise":
            raise ValueError("circuit already contains noise gates")
        if g.duration < 0:
            raise ValueError(f"gate {g.kind} has negative duration")

    last_gate_of: dict[int, int] = {}
    for i, g in enumerate(circuit.gates):
        for q in _touched_qubits(g):
            last_gate_of[q] = i
    total_time = sum(g.duration for g in circuit.gates)

    covered = {q: 0.0 for q in range(circuit.num_qubits)}
    out: list[GateSpec] = []
    now = 0.0
    for i, g in enumerate(circuit.gates):
        start, end = now, now + g.duration
        now = end
        touched = _touched_qubits(g)
        for q in touched:
            out.append(GateSpec("noise", (q,), duration=end - covered[q]))
            covered[q] = end
        out.append(g)
        for q in touched:
            if last_gate_of[q] == i:
                out.append(GateSpec("noise", (q,), duration=total_time - start))
    for q in range(circuit.num_qubits):
        if q not in last_gate_of:
            out.append(GateSpec("noise", (q,), duration=total_time))
    return Circuit(circuit.num_qubits, tuple(out))

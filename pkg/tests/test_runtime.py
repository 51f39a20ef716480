import numpy as np
import pytest

from qpool import runtime
from qpool import statevector as sv
from qpool.circuit import Circuit, GateSpec, parse_circuit
from qpool.runtime import run_spmd

from conftest import bits_equal


def test_context_rejects_too_many_ranks_for_register():
    def rank_fn(transport):
        runtime.make_context(transport, 2, 1, seed=0)

    with pytest.raises(RuntimeError, match="no local qubit"):
        run_spmd(4, rank_fn)


def test_norm_drift_detected_for_non_unitary_custom_gate():
    shrink = np.array([[0.5, 0], [0, 0.5]], dtype=np.complex128)
    circuit = Circuit(2, tuple(GateSpec("custom", (0,), matrix=shrink)
                               for _ in range(100)))
    ctx = runtime.make_context(None, 2, 1, seed=0)
    with pytest.raises(runtime.NormDriftError):
        runtime.run_circuit(ctx, circuit)


def test_norm_check_runs_every_hundred_gates():
    # 99 shrinking gates pass silently; the 100th triggers the check
    shrink = np.array([[0.999, 0], [0, 0.999]], dtype=np.complex128)
    ctx = runtime.make_context(None, 1, 1, seed=0)
    for _ in range(99):
        runtime.apply_gate(ctx, GateSpec("custom", (0,), matrix=shrink))
    with pytest.raises(runtime.NormDriftError):
        runtime.apply_gate(ctx, GateSpec("custom", (0,), matrix=shrink))


def test_reset_state_restores_basis():
    ctx = runtime.make_context(None, 2, 1, seed=0)
    runtime.run_circuit(ctx, parse_circuit("qubits 2\nh 0\ncx 0 1\n"))
    runtime.reset_state(ctx, index=2)
    assert ctx.partition.amplitudes[2] == 1.0
    assert ctx.gates_applied == 0


def test_simulate_circuit_with_pool_and_ranks():
    bell = parse_circuit("qubits 2\nh 0\ncx 0 1\n")
    reference = runtime.simulate_circuit(bell)
    pooled = runtime.simulate_circuit(bell, num_ranks=4, num_states=2)
    assert bits_equal(pooled, reference)


def test_idle_rank_measures_zero_and_skips_gates():
    def rank_fn(transport):
        ctx = runtime.make_context(transport, 2, 1, seed=0)  # world 3 -> rank 2 idle
        runtime.run_circuit(ctx, parse_circuit("qubits 2\nh 0\n"))
        return ctx.is_idle, runtime.measure_probability(ctx, 0)

    out = run_spmd(3, rank_fn)
    assert out[0][0] is False and out[2][0] is True
    assert np.isclose(out[0][1], 0.5)
    assert out[2][1] == 0.0


def test_noise_gate_without_model_rejected():
    ctx = runtime.make_context(None, 1, 1, seed=0)
    with pytest.raises(ValueError, match="noise model"):
        runtime.apply_gate(ctx, GateSpec("noise", (0,), duration=1.0))


def test_unbound_slot_rejected_at_apply():
    ctx = runtime.make_context(None, 1, 1, seed=0)
    with pytest.raises(ValueError, match="unbound"):
        runtime.apply_gate(ctx, GateSpec("rx", (0,), "$theta"))

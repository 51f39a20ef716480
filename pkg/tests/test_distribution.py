import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpool import distribution as dist
from qpool import gates
from qpool import statevector as sv
from qpool.runtime import run_spmd, simulate_circuit
from qpool.transport import TransportTimeout

import oracles
from conftest import assert_states_close, bits_equal, gate_dicts_to_circuit


class TestRankAndOffset:
    def test_high_bits_select_rank(self):
        # n=3 over 2 ranks: index 5 = binary 101 -> rank 1, offset 1
        assert dist.rank_and_offset(5, dist.RankTopology(2, 3)) == (1, 1)

    def test_zero_maps_to_origin(self):
        for ranks, n in [(1, 2), (2, 3), (4, 6), (8, 9)]:
            assert dist.rank_and_offset(0, dist.RankTopology(ranks, n)) == (0, 0)

    def test_direct_evaluation(self):
        # n=4, p=2: index 13 = binary 1101 -> rank 3, offset 1
        assert dist.rank_and_offset(13, dist.RankTopology(4, 4)) == (3, 1)

    @given(st.integers(1, 3), st.integers(4, 8), st.data())
    def test_bijective(self, p, n, data):
        topo = dist.RankTopology(1 << p, n)
        i = data.draw(st.integers(0, (1 << n) - 1))
        rank, offset = dist.rank_and_offset(i, topo)
        assert rank * (1 << topo.num_local_qubits) + offset == i

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            dist.rank_and_offset(8, dist.RankTopology(2, 3))


class TestTopology:
    def test_effective_ranks_floor_log2(self):
        topo = dist.RankTopology(5, 6)
        assert topo.effective_ranks == 4
        assert topo.num_local_qubits == 4

    def test_requires_local_qubit(self):
        with pytest.raises(ValueError):
            dist.RankTopology(4, 2)

    def test_partner_is_involution(self):
        topo = dist.RankTopology(8, 6)  # m = 3
        for q in range(3, 6):
            for r in range(8):
                partner = dist.exchange_partner(r, q, topo)
                assert partner != r
                assert dist.exchange_partner(partner, q, topo) == r

    def test_partner_rejects_local_qubit(self):
        with pytest.raises(ValueError):
            dist.exchange_partner(0, 0, dist.RankTopology(2, 3))


def _spmd_gate(world, n, init_index, body, timeout=5.0):
    """Run `body(part, topo, comm, transport)` on every rank of one group."""
    topo = dist.RankTopology(world, n)

    def rank_fn(transport):
        comm = dist.GroupComm(transport, 0, world)
        part = None
        if comm.rank < topo.effective_ranks:
            part = sv.allocate_partition(n, topo.num_local_qubits, comm.rank)
            sv.init_basis_state(part, init_index)
        return body(part, topo, comm, transport)

    return run_spmd(world, rank_fn, timeout=timeout)


def _assemble(results):
    return np.concatenate([amps for amps in results if amps is not None])


class TestExchangeGate:
    def test_global_gate_message_volume_n3(self):
        # n=3, p=1, q=2: each rank ships its 2-amplitude half out and back
        def body(part, topo, comm, transport):
            dist.apply_one_qubit_gate(part, topo, comm, 2, gates.HADAMARD)
            return (transport.counters.messages_sent,
                    transport.counters.amplitudes_sent,
                    part.amplitudes)

        out = _spmd_gate(2, 3, 0, body)
        for messages, amps, _ in out:
            assert messages == 2
            assert amps == 4  # 2 out + 2 back
        full = np.concatenate([row[2] for row in out])
        expected = oracles.one_qubit_operator(3, 2, oracles.H) @ np.eye(8)[0]
        assert_states_close(full, expected)

    def test_local_gate_sends_nothing(self):
        def body(part, topo, comm, transport):
            dist.apply_one_qubit_gate(part, topo, comm, 0, gates.HADAMARD)
            return transport.counters.messages_sent, transport.counters.amplitudes_sent

        for counts in _spmd_gate(4, 5, 0, body):
            assert counts == (0, 0)

    def test_hadamard_on_top_qubit_placement(self):
        # H on q=3 of |0000>, 4 ranks: weight lands on ranks 0 and 2
        def body(part, topo, comm, transport):
            dist.apply_one_qubit_gate(part, topo, comm, 3, gates.HADAMARD)
            return part.amplitudes

        out = _spmd_gate(4, 4, 0, body)
        full = _assemble(out)
        inv_sqrt2 = 1 / np.sqrt(2)
        assert np.isclose(full[0], inv_sqrt2) and np.isclose(full[8], inv_sqrt2)
        assert np.count_nonzero(np.abs(full) > 1e-15) == 2
        assert np.abs(out[1]).max() == 0 and np.abs(out[3]).max() == 0

    def test_exchange_volume_invariant(self, rng):
        n = 6
        for p in (1, 2, 3):
            world = 1 << p
            half = 1 << (n - p - 1)
            u = gates.gate_matrix(oracles.random_unitary_2x2(rng))
            for q in range(n - p, n):
                def body(part, topo, comm, transport, q=q):
                    before = transport.counters.snapshot()
                    dist.apply_one_qubit_gate(part, topo, comm, q, u)
                    return transport.counters.delta(before)

                for delta in _spmd_gate(world, n, 0, body):
                    assert delta.amplitudes_sent == 2 * half
                    assert delta.messages_sent == 2

    def test_chunked_exchange_same_result(self, rng):
        n = 5
        u = gates.gate_matrix(oracles.random_unitary_2x2(rng))

        def run(chunk):
            def body(part, topo, comm, transport):
                dist.apply_one_qubit_gate(part, topo, comm, 4, u, chunk=chunk)
                return (part.amplitudes, transport.counters.messages_sent)

            return _spmd_gate(2, n, 1, body)

        whole = run(1 << 26)
        chunked = run(4)
        assert bits_equal(_assemble([r[0] for r in whole]),
                          _assemble([r[0] for r in chunked]))
        assert whole[0][1] == 2
        assert chunked[0][1] == 4  # 8-amplitude halves in 4-amplitude chunks

    def test_mismatched_collective_times_out(self):
        def body(part, topo, comm, transport):
            q = 2 if comm.rank == 0 else 0  # rank 1 never enters the exchange
            dist.apply_one_qubit_gate(part, topo, comm, q, gates.PAULI_X)

        with pytest.raises(RuntimeError) as err:
            _spmd_gate(2, 3, 0, body, timeout=0.2)
        assert isinstance(err.value.__cause__, TransportTimeout)

    def test_qubit_out_of_range(self):
        def body(part, topo, comm, transport):
            dist.apply_one_qubit_gate(part, topo, comm, 3, gates.PAULI_X)

        with pytest.raises(RuntimeError):
            _spmd_gate(2, 3, 0, body)


class TestControlledGate:
    def test_cnot_local_case(self):
        # p=0: CNOT(c=1, t=0) on |10> -> |11>
        part = sv.init_basis_state(sv.allocate_partition(2), 2)
        dist.apply_controlled_gate(part, dist.RankTopology(1, 2),
                                   dist.single_rank_comm(), 1, 0, gates.PAULI_X)
        assert part.amplitudes[3] == 1.0

    def test_control_global_target_local_no_messages(self):
        # n=3, p=1: CNOT(c=2, t=0) on |100>: rank 1 flips locally
        def body(part, topo, comm, transport):
            dist.apply_controlled_gate(part, topo, comm, 2, 0, gates.PAULI_X)
            return part.amplitudes, transport.counters.messages_sent

        out = _spmd_gate(2, 3, 0b100, body)
        full = _assemble([r[0] for r in out])
        assert full[0b101] == 1.0
        assert np.count_nonzero(full) == 1
        assert all(r[1] == 0 for r in out)

    @pytest.mark.parametrize("control,target", [
        (0, 1),   # both local
        (3, 0),   # control global, target local
        (1, 3),   # control local, target global
        (3, 2),   # both global
        (2, 3),   # both global, other orientation
        (0, 2),   # target on the rank-boundary qubit
    ])
    def test_four_locality_cases_match_dense(self, control, target, rng):
        n, world = 4, 4  # m = 2: qubits 2,3 global
        psi0 = oracles.random_state(n, rng)
        u = oracles.random_unitary_2x2(rng)

        def body(part, topo, comm, transport):
            lo = comm.rank << topo.num_local_qubits
            part.amplitudes[:] = psi0[lo:lo + part.amplitudes.size]
            dist.apply_controlled_gate(part, topo, comm, control, target,
                                       gates.gate_matrix(u))
            return part.amplitudes

        full = _assemble(_spmd_gate(world, n, 0, body))
        expected = oracles.controlled_operator(n, control, target, u) @ psi0
        assert_states_close(full, expected)

    def test_cz_both_global_matches_dense(self, rng):
        n, world = 4, 4
        psi0 = oracles.random_state(n, rng)

        def body(part, topo, comm, transport):
            lo = comm.rank << topo.num_local_qubits
            part.amplitudes[:] = psi0[lo:lo + part.amplitudes.size]
            dist.apply_controlled_gate(part, topo, comm, n - 1, n - 2, gates.PAULI_Z)
            return part.amplitudes

        full = _assemble(_spmd_gate(world, n, 0, body))
        expected = oracles.controlled_operator(n, n - 1, n - 2, oracles.Z) @ psi0
        assert_states_close(full, expected)

    def test_rejects_equal_control_target(self):
        part = sv.allocate_partition(2)
        with pytest.raises(ValueError):
            dist.apply_controlled_gate(part, dist.RankTopology(1, 2),
                                       dist.single_rank_comm(), 1, 1, gates.PAULI_X)


class TestGroupReduce:
    def test_single_rank_identity(self):
        val = dist.group_reduce_sum(0.75, dist.RankTopology(1, 2),
                                    dist.single_rank_comm())
        assert val == 0.75

    def test_equal_partials(self):
        def body(part, topo, comm, transport):
            return dist.group_reduce_sum(0.25, topo, comm)

        assert _spmd_gate(4, 4, 0, body) == [1.0] * 4

    def test_matches_serial_tree_order_bitwise(self, rng):
        partials = rng.standard_normal(8)

        def body(part, topo, comm, transport):
            return dist.group_reduce_sum(partials[comm.rank], topo, comm)

        out = _spmd_gate(8, 5, 0, body)
        expected = sv.tree_sum(partials)
        assert all(v == expected for v in out)


class TestEquivalence:
    @pytest.mark.parametrize("n", [6, 8])
    def test_distributed_matches_single_rank_bitwise(self, n, rng):
        gates_list = oracles.random_gate_list(n, 30, rng, edges=((0, 1), (1, 2)))
        circuit = gate_dicts_to_circuit(n, gates_list)
        reference = simulate_circuit(circuit, num_ranks=1)
        dense = oracles.apply_gate_list_dense(n, gates_list)
        assert_states_close(reference, dense)
        for p in (1, 2, 3):
            out = simulate_circuit(circuit, num_ranks=1 << p)
            assert bits_equal(out, reference), f"p={p} diverged"

    def test_idle_ranks_with_non_power_of_two_world(self, rng):
        # world=3 -> effective 2 ranks; rank 2 holds nothing and must not block
        n = 4
        gates_list = oracles.random_gate_list(n, 12, rng)
        circuit = gate_dicts_to_circuit(n, gates_list)
        reference = simulate_circuit(circuit, num_ranks=2)

        def rank_fn(transport):
            from qpool import runtime
            ctx = runtime.make_context(transport, n, 1, seed=0)
            runtime.run_circuit(ctx, circuit)
            return runtime.gather_group_state(ctx)

        out = run_spmd(3, rank_fn, timeout=5.0)
        assert bits_equal(out[0], reference)

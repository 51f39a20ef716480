"""Distributed state-vector quantum circuit simulator with a pool of states.

The state of n qubits lives as 2**n complex amplitudes split across 2**p
ranks; rank groups evolve independent pool states in parallel. On top sit
stochastic T1/T2 noise trajectories and a particle-swarm driver for
QAOA/MaxCut, emulating many quantum devices running at once.
"""
from .circuit import (
    Circuit,
    CircuitParseError,
    GateSpec,
    UnboundParameterError,
    build_qaoa_circuit,
    load_circuit,
    parse_circuit,
    qaoa_bindings,
    serialize_circuit,
)
from .distribution import (
    GroupComm,
    RankTopology,
    apply_controlled_gate,
    apply_one_qubit_gate,
    exchange_partner,
    group_reduce_sum,
    rank_and_offset,
    single_rank_comm,
)
from .graphs import Graph, cut_counts, load_graph, make_graph, parse_graph, serialize_graph
from .noise import NOISELESS, NoiseModel, apply_noise_gate, noise_gate_matrix, schedule_noise, trajectory_stream
from .optimize import (
    Particle,
    PsoHyperparams,
    Swarm,
    exact_maxcut,
    init_swarm,
    random_3regular_graph,
    run_pso_qaoa,
    step_swarm,
    update_velocity,
)
from .pool import (
    PoolLayout,
    RandomStream,
    build_pool,
    incoherent_sum_over_pool,
    uniform_randoms,
)
from .runtime import (
    RankContext,
    apply_gate_pool,
    gather_group_state,
    make_context,
    measure_maxcut,
    measure_probability,
    measure_z,
    pool_sum,
    reset_state,
    run_circuit,
    run_circuit_pool,
    run_spmd,
    simulate_circuit,
)
from .statevector import (
    LocalityError,
    StatePartition,
    allocate_partition,
    apply_diagonal_phase,
    apply_local_one_qubit_gate,
    full_state_bytes,
    get_probability,
    init_basis_state,
    init_uniform,
    maxcut_expectation,
    norm_squared,
    tree_sum,
    z_expectation,
)
from .transport import (
    InProcessFabric,
    SocketTransport,
    Transport,
    TransportCounters,
    TransportError,
    TransportTimeout,
    write_rendezvous,
)

__version__ = "0.1.0"

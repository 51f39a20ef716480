"""Particle swarm optimization over QAOA parameters, with MaxCut references.

One particle is one virtual quantum device: its 2p-dimensional position is a
QAOA parameter point, and its objective is the cut expectation divided by the
exact maximum cut. The swarm maximizes; global and per-particle bests never
decrease. Velocity update per particle k:

    v_k <- omega * v_k + phi_p * r_p * (best_k - x_k) + phi_g * r_g * (g - x_k)

with scalar r_p, r_g drawn fresh per particle per step. The ``paper`` sign
mode flips both difference terms for comparison runs. Positions wrap into
[0, 2pi) after each move; the objective is periodic in every coordinate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import runtime
from .circuit import build_qaoa_circuit, qaoa_bindings
from .graphs import Graph, cut_counts, make_graph
from .pool import RandomStream

TWO_PI = 2.0 * np.pi
EXACT_MAXCUT_LIMIT = 30


@dataclass(frozen=True)
class PsoHyperparams:
    omega: float = 0.66
    phi_p: float = 1.6
    phi_g: float = 0.62
    sign: str = "standard"  # or "paper"

    def __post_init__(self) -> None:
        if self.sign not in ("standard", "paper"):
            raise ValueError(f"unknown sign mode {self.sign!r}")


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray | None = None
    best_value: float = -np.inf


@dataclass
class Swarm:
    particles: list[Particle]
    hyper: PsoHyperparams
    stream: RandomStream
    global_best_position: np.ndarray | None = None
    global_best_value: float = -np.inf
    steps_taken: int = field(default=0)

    @property
    def dim(self) -> int:
        return self.particles[0].position.size


def init_swarm(num_particles: int, dim: int, hyper: PsoHyperparams | None = None,
               stream: RandomStream | None = None, seed: int = 0) -> Swarm:
    """Positions and velocities uniform in [0, 2pi); bests wait for the first
    evaluation round."""
    if num_particles < 1 or dim < 1:
        raise ValueError("need at least one particle and one dimension")
    hyper = hyper or PsoHyperparams()
    stream = stream or RandomStream(seed, "pool", 0)
    draws = stream.uniform(2 * num_particles * dim, 0.0, TWO_PI)
    positions = draws[: num_particles * dim].reshape(num_particles, dim)
    velocities = draws[num_particles * dim:].reshape(num_particles, dim)
    particles = [Particle(positions[k].copy(), velocities[k].copy())
                 for k in range(num_particles)]
    return Swarm(particles, hyper, stream)


def update_velocity(velocity: np.ndarray, position: np.ndarray,
                    best_position: np.ndarray, global_best: np.ndarray,
                    hyper: PsoHyperparams, r_p: float, r_g: float) -> np.ndarray:
    if hyper.sign == "standard":
        toward_best = best_position - position
        toward_global = global_best - position
    else:
        toward_best = position - best_position
        toward_global = position - global_best
    return (hyper.omega * velocity
            + hyper.phi_p * r_p * toward_best
            + hyper.phi_g * r_g * toward_global)


def step_swarm(swarm: Swarm, values) -> Swarm:
    """Fold in one objective value per particle, then move the swarm."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (len(swarm.particles),):
        raise ValueError(
            f"expected {len(swarm.particles)} objective values, got {values.shape}"
        )
    for particle, value in zip(swarm.particles, values):
        if value > particle.best_value:
            particle.best_value = float(value)
            particle.best_position = particle.position.copy()
    best_k = int(np.argmax([p.best_value for p in swarm.particles]))
    if swarm.particles[best_k].best_value > swarm.global_best_value:
        swarm.global_best_value = swarm.particles[best_k].best_value
        swarm.global_best_position = swarm.particles[best_k].best_position.copy()

    draws = swarm.stream.uniform(2 * len(swarm.particles)).reshape(-1, 2)
    for k, particle in enumerate(swarm.particles):
        particle.velocity = update_velocity(
            particle.velocity, particle.position, particle.best_position,
            swarm.global_best_position, swarm.hyper, draws[k, 0], draws[k, 1],
        )
        particle.position = np.mod(particle.position + particle.velocity, TWO_PI)
    swarm.steps_taken += 1
    return swarm


def exact_maxcut(graph: Graph) -> int:
    """Largest cut over all bipartitions, by enumeration (n <= 30)."""
    n = graph.num_vertices
    if n > EXACT_MAXCUT_LIMIT:
        raise ValueError(f"exact_maxcut is capped at {EXACT_MAXCUT_LIMIT} vertices")
    best = 0
    chunk = 1 << 20
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint64)
        best = max(best, int(cut_counts(graph, idx).max()))
    return best


def random_3regular_graph(num_vertices: int, stream: RandomStream) -> Graph:
    """Simple 3-regular graph via the pairing model with rejection."""
    if num_vertices < 4:
        raise ValueError("no 3-regular graph below 4 vertices")
    if num_vertices % 2:
        raise ValueError("3-regular graphs need an even vertex count")
    stubs_template = np.repeat(np.arange(num_vertices), 3)
    while True:
        stubs = stubs_template.copy()
        u = stream.uniform(stubs.size - 1)
        for i in range(stubs.size - 1, 0, -1):
            j = int(u[stubs.size - 1 - i] * (i + 1))
            stubs[i], stubs[j] = stubs[j], stubs[i]
        pairs = stubs.reshape(-1, 2)
        edges = set()
        ok = True
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b or (min(a, b), max(a, b)) in edges:
                ok = False
                break
            edges.add((min(a, b), max(a, b)))
        if ok:
            return make_graph(num_vertices, sorted(edges))


@dataclass(frozen=True)
class TraceRow:
    evaluations: int
    global_best_ratio: float
    step: int


def trace_csv_lines(trace) -> list[str]:
    lines = ["evaluations,global_best_ratio,step"]
    lines.extend(f"{r.evaluations},{r.global_best_ratio!r},{r.step}" for r in trace)
    return lines


def run_pso_qaoa(ctx: runtime.RankContext, graph: Graph, depth: int,
                 num_particles: int, budget: int,
                 stream: RandomStream | None = None,
                 hyper: PsoHyperparams | None = None) -> list[TraceRow]:
    """Drive PSO over QAOA/MaxCut parameters across the pool.

    Particles map round-robin onto state groups; each batch evaluates all R
    particles (the evaluations-per-step rule), shares the values pool-wide,
    and advances the replicated swarm identically on every rank. The trace
    records the global best ratio after each batch.
    """
    if budget < num_particles:
        raise ValueError(
            f"budget {budget} cannot complete one round of {num_particles} particles"
        )
    exact = exact_maxcut(graph)
    if exact == 0:
        raise ValueError("graph has no edges to cut")
    circuit = build_qaoa_circuit(graph, depth)
    stream = stream or ctx.pool_stream
    swarm = init_swarm(num_particles, 2 * depth, hyper, stream)
    num_groups = ctx.layout.num_states
    batches = budget // num_particles
    trace: list[TraceRow] = []
    for step in range(batches):
        values = np.empty(num_particles, dtype=np.float64)
        for chunk_start in range(0, num_particles, num_groups):
            count = min(num_groups, num_particles - chunk_start)
            tables: dict[str, np.ndarray] = {}
            for s in range(num_groups):
                k = chunk_start + min(s, count - 1)  # clamp spare groups to a dummy
                for name, value in qaoa_bindings(
                    depth, swarm.particles[k].position
                ).items():
                    tables.setdefault(name, np.empty(num_groups))[s] = value
            runtime.reset_state(ctx)
            runtime.run_circuit_pool(ctx, circuit, tables)
            mine = runtime.measure_maxcut(ctx, graph) / exact
            for offset in range(count):
                contribution = mine if (not ctx.is_idle and ctx.group == offset) else 0.0
                values[chunk_start + offset] = runtime.pool_sum(ctx, contribution)
        step_swarm(swarm, values)
        trace.append(TraceRow((step + 1) * num_particles,
                              float(swarm.global_best_value), step))
    return trace

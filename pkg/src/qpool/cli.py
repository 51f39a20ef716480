"""Command-line entry point.

Subcommands:
  run             execute a circuit file and report probabilities/amplitudes
  bench-gate      time a random one-qubit gate per qubit index, CSV out
  qaoa-pso        PSO over QAOA/MaxCut on random 3-regular graphs, CSV traces
  noise-ensemble  incoherent-average convergence of a noisy circuit, CSV out

Ranks run either as worker threads inside this process (--transport inproc,
--ranks N) or as one OS process per rank (--transport socket, rank index in
the QPOOL_RANK environment variable, peers listed in the --rendezvous file).
Exit codes: 0 success, 2 usage/parse errors, 3 transport failures.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import distribution as dist
from . import gates
from . import graphs as graphs_mod
from . import runtime
from . import statevector as sv
from .circuit import CircuitParseError, UnboundParameterError, load_circuit
from .noise import NOISELESS, NoiseModel, schedule_noise, trajectory_stream
from .optimize import (
    PsoHyperparams,
    TraceRow,
    random_3regular_graph,
    run_pso_qaoa,
    trace_csv_lines,
)
from .transport import (
    SocketTransport,
    TransportError,
    TransportTimeout,
    load_rendezvous,
)

RANK_ENV_VAR = "QPOOL_RANK"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TRANSPORT = 3


class UsageError(ValueError):
    pass


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ranks", type=int, default=1,
                        help="worker ranks for the in-process transport")
    parser.add_argument("--states", type=int, default=1,
                        help="pool states (rank groups)")
    parser.add_argument("--transport", choices=("inproc", "socket"), default="inproc")
    parser.add_argument("--rendezvous", help="host:port file for socket mode")
    parser.add_argument("--seed", type=int, default=0, help="master seed (decimal)")
    parser.add_argument("--out", help="also write the report/CSV to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpool")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a circuit file")
    p_run.add_argument("circuit")
    p_run.add_argument("--t1", type=float, default=math.inf)
    p_run.add_argument("--t2", type=float, default=math.inf)
    p_run.add_argument("--bind", action="append", default=[], metavar="NAME=VALUE",
                       help="bind a parameter slot")
    p_run.add_argument("--maxcut", metavar="GRAPHFILE",
                       help="also report the cut expectation for this graph")
    _add_common(p_run)

    p_bench = sub.add_parser("bench-gate", help="one-qubit gate timing per qubit")
    p_bench.add_argument("--n", type=int, required=True, help="qubit count")
    p_bench.add_argument("--repetitions", type=int, default=3)
    _add_common(p_bench)

    p_pso = sub.add_parser("qaoa-pso", help="PSO/QAOA study on random 3-regular graphs")
    p_pso.add_argument("--vertices", type=int, required=True)
    p_pso.add_argument("--graphs", type=int, default=1)
    p_pso.add_argument("--depth", type=int, default=1)
    p_pso.add_argument("--particles", type=int, default=4)
    p_pso.add_argument("--budget", type=int, required=True)
    p_pso.add_argument("--pso-sign", choices=("standard", "paper"), default="standard")
    _add_common(p_pso)

    p_noise = sub.add_parser("noise-ensemble",
                             help="running incoherent average of a noisy circuit")
    p_noise.add_argument("circuit")
    p_noise.add_argument("--t1", type=float, required=True)
    p_noise.add_argument("--t2", type=float, required=True)
    p_noise.add_argument("--trajectories", type=int, default=100)
    p_noise.add_argument("--observable", default="prob:0",
                         help="prob:<qubit> or maxcut:<graphfile>")
    p_noise.add_argument("--bind", action="append", default=[], metavar="NAME=VALUE",
                         help="bind a parameter slot")
    _add_common(p_noise)

    return parser


def _execute_ranks(args, rank_fn):
    """Run rank_fn on every rank; return its rank-0 result (None elsewhere)."""
    if args.transport == "socket":
        if not args.rendezvous:
            raise UsageError("socket transport needs --rendezvous")
        rank_text = os.environ.get(RANK_ENV_VAR)
        if rank_text is None:
            raise UsageError(f"socket transport needs {RANK_ENV_VAR} in the environment")
        rank = int(rank_text)
        addresses = load_rendezvous(args.rendezvous)
        if not (0 <= rank < len(addresses)):
            raise UsageError(f"rank {rank} outside rendezvous of {len(addresses)}")
        transport = SocketTransport(rank, addresses)
        try:
            result = rank_fn(transport)
            transport.barrier()
        finally:
            transport.close()
        return result
    if args.ranks < 1:
        raise UsageError("--ranks must be >= 1")
    return runtime.run_spmd(args.ranks, rank_fn)[0]


def _emit(text: str, args) -> None:
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _parse_bindings(pairs) -> dict[str, float]:
    bindings: dict[str, float] = {}
    for pair in pairs:
        name, eq, value = pair.partition("=")
        if not eq or not name:
            raise UsageError(f"--bind expects NAME=VALUE, got {pair!r}")
        bindings[name.lstrip("$")] = float(value)
    return bindings


def cmd_run(args) -> int:
    circuit = load_circuit(args.circuit)
    bindings = _parse_bindings(args.bind)
    model = NoiseModel(args.t1, args.t2)
    cut_graph = graphs_mod.load_graph(args.maxcut) if args.maxcut else None
    n = circuit.num_qubits

    def rank_fn(transport):
        ctx = runtime.make_context(transport, n, args.states, args.seed, model)
        runtime.run_circuit(ctx, circuit, bindings)
        probs = [runtime.measure_probability(ctx, q) for q in range(n)]
        cut = runtime.measure_maxcut(ctx, cut_graph) if cut_graph is not None else None
        full = runtime.gather_group_state(ctx) if n <= 10 else None
        if ctx.world_rank != 0:
            return None
        lines = [
            f"qubits {n}",
            f"ranks {1 if transport is None else transport.world_size}",
            f"states {ctx.layout.num_states}",
            f"seed {args.seed}",
        ]
        lines.extend(f"prob {q} {probs[q]!r}" for q in range(n))
        if full is not None:
            lines.extend(
                f"amp {i} {float(full[i].real)!r} {float(full[i].imag)!r}"
                for i in range(full.size)
            )
        if cut is not None:
            lines.append(f"maxcut {cut!r}")
        return "\n".join(lines) + "\n"

    report = _execute_ranks(args, rank_fn)
    if report is not None:
        _emit(report, args)
    return EXIT_OK


def _random_unitary(stream) -> np.ndarray:
    a, b, c = stream.uniform(3, 0.0, 2.0 * math.pi)
    return gates.rz(a) @ gates.ry(b) @ gates.rz(c)


def cmd_bench_gate(args) -> int:
    n = args.n
    if args.repetitions < 1:
        raise UsageError("--repetitions must be >= 1")

    def rank_fn(transport):
        ctx = runtime.make_context(transport, n, 1, args.seed)
        if not ctx.is_idle:
            sv.init_uniform(ctx.partition)
            # one untimed warmup so first-touch page faults stay out of row 0
            dist.apply_one_qubit_gate(ctx.partition, ctx.topology, ctx.comm, 0,
                                      np.eye(2, dtype=np.complex128))
        rows = []
        for q in range(n):
            u = _random_unitary(ctx.pool_stream)
            transport.barrier()
            before = transport.counters.snapshot()
            times = []
            for _ in range(args.repetitions):
                t0 = time.perf_counter()
                if not ctx.is_idle:
                    dist.apply_one_qubit_gate(ctx.partition, ctx.topology, ctx.comm, q, u)
                times.append(time.perf_counter() - t0)
            delta = transport.counters.delta(before)
            transport.barrier()
            rows.append((
                q,
                sum(times) / len(times),
                delta.messages_sent // args.repetitions,
                delta.bytes_sent // args.repetitions,
                min(times),
            ))
        if transport.rank != 0:
            return None
        world = transport.world_size
        lines = ["qubit,mean_seconds,messages,bytes,ranks,n,min_seconds"]
        lines.extend(
            f"{q},{mean!r},{msgs},{nbytes},{world},{n},{tmin!r}"
            for q, mean, msgs, nbytes, tmin in rows
        )
        return "\n".join(lines) + "\n"

    csv = _execute_ranks(args, rank_fn)
    if csv is not None:
        _emit(csv, args)
    return EXIT_OK


def _aggregate_traces(traces: list[list[TraceRow]]) -> list[str]:
    lines = ["evaluations,mean_ratio,step"]
    for i, row in enumerate(traces[0]):
        mean = sum(t[i].global_best_ratio for t in traces) / len(traces)
        lines.append(f"{row.evaluations},{mean!r},{row.step}")
    return lines


def cmd_qaoa_pso(args) -> int:
    if args.vertices % 2 or args.vertices > 20:
        raise UsageError("--vertices must be even and <= 20 at desk scale")
    hyper = PsoHyperparams(sign=args.pso_sign)

    def rank_fn(transport):
        ctx = runtime.make_context(transport, args.vertices, args.states, args.seed)
        traces = []
        for k in range(args.graphs):
            graph = random_3regular_graph(args.vertices, ctx.pool_stream.split(2 * k))
            swarm_stream = ctx.pool_stream.split(2 * k + 1)
            traces.append(run_pso_qaoa(ctx, graph, args.depth, args.particles,
                                       args.budget, swarm_stream, hyper))
        return traces if ctx.world_rank == 0 else None

    traces = _execute_ranks(args, rank_fn)
    if traces is None:
        return EXIT_OK
    aggregate = "\n".join(_aggregate_traces(traces)) + "\n"
    _emit(aggregate, args)
    if args.out:
        stem, ext = os.path.splitext(args.out)
        for k, trace in enumerate(traces):
            with open(f"{stem}_instance{k}{ext or '.csv'}", "w", encoding="utf-8") as fh:
                fh.write("\n".join(trace_csv_lines(trace)) + "\n")
    return EXIT_OK


def _make_observable(spec_text: str):
    kind, _, arg = spec_text.partition(":")
    if kind == "prob":
        q = int(arg)
        return lambda ctx: runtime.measure_probability(ctx, q)
    if kind == "maxcut":
        graph = graphs_mod.load_graph(arg)
        return lambda ctx: runtime.measure_maxcut(ctx, graph)
    raise UsageError(f"unknown observable {spec_text!r}")


def cmd_noise_ensemble(args) -> int:
    model = NoiseModel(args.t1, args.t2)
    circuit = load_circuit(args.circuit).bind(_parse_bindings(args.bind))
    circuit.require_bound()
    if not any(g.kind == "noise" for g in circuit.gates):
        circuit = schedule_noise(circuit)
    observe = _make_observable(args.observable)
    total = args.trajectories
    if total < 1:
        raise UsageError("--trajectories must be >= 1")

    def rank_fn(transport):
        ctx = runtime.make_context(transport, circuit.num_qubits, args.states,
                                   args.seed, model)
        num_groups = ctx.layout.num_states

        ctx.noise_model = NOISELESS
        runtime.reset_state(ctx)
        runtime.run_circuit(ctx, circuit,
                            noise_stream=trajectory_stream(args.seed, 0))
        reference = observe(ctx)
        ctx.noise_model = model

        collected: list[float] = []
        rounds = -(-total // num_groups)
        for k in range(rounds):
            count = min(num_groups, total - k * num_groups)
            value = 0.0
            if not ctx.is_idle and ctx.group < count:
                trajectory = k * num_groups + ctx.group
                runtime.reset_state(ctx)
                runtime.run_circuit(
                    ctx, circuit,
                    noise_stream=trajectory_stream(args.seed, trajectory),
                )
                value = observe(ctx)
            arr = runtime.pool_gather(ctx, value, num_groups=count)
            if ctx.world_rank == 0:
                collected.extend(arr.tolist())
        if ctx.world_rank != 0:
            return None
        running = np.cumsum(collected) / np.arange(1, total + 1)
        lines = ["trajectories,running_mean,reference"]
        lines.extend(
            f"{i + 1},{float(running[i])!r},{reference!r}" for i in range(total)
        )
        return "\n".join(lines) + "\n"

    csv = _execute_ranks(args, rank_fn)
    if csv is not None:
        _emit(csv, args)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "bench-gate": cmd_bench_gate,
    "qaoa-pso": cmd_qaoa_pso,
    "noise-ensemble": cmd_noise_ensemble,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (TransportError, TransportTimeout) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (CircuitParseError, UnboundParameterError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        cause = exc.__cause__
        if isinstance(cause, (TransportError, TransportTimeout)):
            print(f"transport error: {exc}", file=sys.stderr)
            return EXIT_TRANSPORT
        if isinstance(cause, (CircuitParseError, UnboundParameterError, ValueError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        raise


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Convergence of the incoherent average of a noisy QAOA circuit.

Builds a QAOA/MaxCut circuit on a random 3-regular graph, fixes a parameter
point, and runs the noise ensemble for several independent seeds. Each CSV
holds the running ensemble mean vs trajectory count plus the noiseless
reference; overlaying the seeds shows the 1/sqrt(N) spread shrink.
"""
import argparse
import os

from qpool.circuit import build_qaoa_circuit, qaoa_bindings, serialize_circuit
from qpool.cli import main as qpool_main
from qpool.graphs import serialize_graph
from qpool.optimize import random_3regular_graph
from qpool.pool import RandomStream


def run(outdir, vertices, depth, t1, t2, trajectories, seeds, graph_seed):
    os.makedirs(outdir, exist_ok=True)
    graph = random_3regular_graph(vertices, RandomStream(graph_seed, "pool", 0))
    graph_path = os.path.join(outdir, "instance.graph")
    with open(graph_path, "w", encoding="utf-8") as fh:
        fh.write(serialize_graph(graph))

    point = RandomStream(graph_seed, "pool", 0, salt=1).uniform(2 * depth, 0, 6.283185307179586)
    circuit = build_qaoa_circuit(graph, depth, graph_path="instance.graph")
    circuit = circuit.bind(qaoa_bindings(depth, point))
    circuit_path = os.path.join(outdir, "instance.qc")
    with open(circuit_path, "w", encoding="utf-8") as fh:
        fh.write(serialize_circuit(circuit))

    for seed in seeds:
        out = os.path.join(outdir, f"running_mean_seed{seed}.csv")
        print(f"seed {seed}: {trajectories} trajectories -> {out}")
        qpool_main(["noise-ensemble", circuit_path, "--t1", str(t1),
                    "--t2", str(t2), "--trajectories", str(trajectories),
                    "--seed", str(seed),
                    "--observable", f"maxcut:{graph_path}", "--out", out])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="noise_results")
    ap.add_argument("--vertices", type=int, default=8)
    ap.add_argument("--depth", type=int, default=2)
    ap.add_argument("--t1", type=float, default=500.0)
    ap.add_argument("--t2", type=float, default=250.0)
    ap.add_argument("--trajectories", type=int, default=500)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--graph-seed", type=int, default=7)
    args = ap.parse_args()
    run(args.outdir, args.vertices, args.depth, args.t1, args.t2,
        args.trajectories, args.seeds, args.graph_seed)

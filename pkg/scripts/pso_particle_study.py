#!/usr/bin/env python3
"""Approximation ratio vs function evaluations for several particle counts.

Desk-scale analog of the swarm-size study: random 3-regular instances,
fixed evaluation budget, one aggregate CSV per particle count. More
particles explore more but spend more evaluations per step, so the best
count depends on the budget.
"""
import argparse
import os

from qpool.cli import main as qpool_main


def run(outdir, vertices, graphs, depth, budget, particle_counts, seed):
    os.makedirs(outdir, exist_ok=True)
    for particles in particle_counts:
        out = os.path.join(outdir, f"ratio_R{particles}.csv")
        print(f"R={particles}: {graphs} graphs, budget {budget} -> {out}")
        qpool_main(["qaoa-pso", "--vertices", str(vertices),
                    "--graphs", str(graphs), "--depth", str(depth),
                    "--particles", str(particles), "--budget", str(budget),
                    "--seed", str(seed), "--out", out])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="pso_results")
    ap.add_argument("--vertices", type=int, default=8)
    ap.add_argument("--graphs", type=int, default=20)
    ap.add_argument("--depth", type=int, default=2)
    ap.add_argument("--budget", type=int, default=1000)
    ap.add_argument("--particles", type=int, nargs="+", default=[4, 8, 16])
    ap.add_argument("--seed", type=int, default=2026)
    args = ap.parse_args()
    run(args.outdir, args.vertices, args.graphs, args.depth, args.budget,
        args.particles, args.seed)

#!/usr/bin/env python3
"""Strong/weak scaling study of one-qubit gate times.

Strong: fixed register size, growing rank counts. Weak: one extra qubit per
rank doubling, so per-rank memory stays constant. Emits one CSV per
configuration via the bench-gate command; plot qubit index vs mean_seconds
to see the local/global latency step at q = n - p.
"""
import argparse
import os

from qpool.cli import main as qpool_main


def run(outdir: str, n_strong: int, max_rank_power: int, repetitions: int, seed: int):
    os.makedirs(outdir, exist_ok=True)
    for p in range(max_rank_power + 1):
        ranks = 1 << p
        out = os.path.join(outdir, f"strong_n{n_strong}_ranks{ranks}.csv")
        print(f"strong scaling: n={n_strong} ranks={ranks} -> {out}")
        qpool_main(["bench-gate", "--n", str(n_strong), "--ranks", str(ranks),
                    "--repetitions", str(repetitions), "--seed", str(seed),
                    "--out", out])
    base_n = n_strong - max_rank_power
    for p in range(max_rank_power + 1):
        ranks, n = 1 << p, base_n + p
        out = os.path.join(outdir, f"weak_n{n}_ranks{ranks}.csv")
        print(f"weak scaling: n={n} ranks={ranks} -> {out}")
        qpool_main(["bench-gate", "--n", str(n), "--ranks", str(ranks),
                    "--repetitions", str(repetitions), "--seed", str(seed),
                    "--out", out])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="scaling_results")
    ap.add_argument("--n", type=int, default=18, help="strong-scaling register size")
    ap.add_argument("--max-rank-power", type=int, default=2)
    ap.add_argument("--repetitions", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    run(args.outdir, args.n, args.max_rank_power, args.repetitions, args.seed)

"""Compare the compiled and numpy walk kernels on a random graph.

    python3 benchmarks/bench_backends.py --nodes 100000 --grid 10x5,100x5

Both backends produce identical corpora; this checks that first, then
prints best-of-N timings, speedups and the growth relative to linear.
"""
import argparse

import numpy as np

from sge.bench import format_table, linearity, parse_grid, speedups, time_sampling
from sge.sampler import SamplerConfig, available_backends, sample_all
from sge.synthetic import random_graph


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=100_000)
    ap.add_argument("--avg-degree", type=float, default=5.0)
    ap.add_argument("--grid", default="10x5,100x5")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    g = random_graph(args.nodes, args.avg_degree, seed=0)
    backends = available_backends()
    print(f"graph: {g.summary()}; backends: {', '.join(backends)}")

    probe = SamplerConfig(s=5, nu=5, seed=1)
    ref = sample_all(g, probe, backend="python")
    for b in backends:
        got = sample_all(g, probe, backend=b, workers=args.workers)
        assert np.array_equal(ref.tok_node, got.tok_node), f"{b} disagrees with python"
    print("kernels agree on a probe corpus")

    rows = time_sampling(g, parse_grid(args.grid), backends, repeats=args.repeats,
                         workers=args.workers)
    print(format_table(rows), end="")
    for b, info in linearity(rows).items():
        print(f"{b}: growth vs linear {', '.join(f'{x:.2f}' for x in info['growth_vs_linear'])}")
    for r in speedups(rows):
        print(f"{r['backend']} speedup at {r['nu']}x{r['s']}: {r['speedup']:.1f}x")


if __name__ == "__main__":
    main()

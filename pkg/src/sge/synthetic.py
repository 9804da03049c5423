"""Generated graphs for tests, benchmarks and the bundled toy dataset."""
from __future__ import annotations

import numpy as np

from .graph import Graph, _make_labelset


def stochastic_block_model(sizes=(100, 100, 100), p_in: float = 0.1, p_out: float = 0.005,
                           seed: int = 0, prefix: str = "v") -> Graph:
    """Directed SBM: each ordered pair ``(u, v)``, ``u != v``, is an edge independently.

    Node ``i`` is named ``f"{prefix}{i:05d}"`` and labelled ``block<b>``.
    """
    rng = np.random.default_rng(seed)
    block = np.repeat(np.arange(len(sizes)), sizes)
    n = len(block)
    prob = np.where(block[:, None] == block[None, :], p_in, p_out)
    adj = rng.random((n, n)) < prob
    np.fill_diagonal(adj, False)
    src, dst = np.nonzero(adj)
    names = [f"{prefix}{i:05d}" for i in range(n)]
    labels = _make_labelset({names[i]: f"block{block[i]}" for i in range(n)},
                            {name: i for i, name in enumerate(names)})
    return Graph._from_arrays(names, src.astype(np.int64), dst.astype(np.int64),
                              np.zeros(n, dtype=np.int32), ("node",), None, (), labels)


def random_graph(num_nodes: int, avg_out_degree: float = 5.0, seed: int = 0) -> Graph:
    """Directed multigraph with ``num_nodes * avg_out_degree`` uniformly random edges."""
    rng = np.random.default_rng(seed)
    m = int(round(num_nodes * avg_out_degree))
    src = rng.integers(0, num_nodes, m)
    dst = rng.integers(0, num_nodes, m)
    width = len(str(max(num_nodes - 1, 0)))
    names = [f"n{i:0{width}d}" for i in range(num_nodes)]
    return Graph._from_arrays(names, src, dst, np.zeros(num_nodes, dtype=np.int32),
                              ("node",), None, (), None)

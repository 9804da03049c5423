"""Vectorised numpy walk kernel; used when the compiled extension is absent.

Must produce exactly the same output as ``_walk_core.pyx``: every random
draw is a pure function of ``(node key, walk slot, step)``.
"""
import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S32 = (np.uint64(k) for k in (30, 27, 31, 32))


def mix64(z):
    """splitmix64 finaliser on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def node_keys(seed, nodes):
    """Per-node stream keys derived from the global seed and node index."""
    base = mix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    return mix64(base + np.asarray(nodes, dtype=np.uint64) * GAMMA)


def sample_walks(indptr, indices, starts, keys, walk_lengths, s, workers=1):
    """Simulate one batch of walks for every start node.

    Returns ``(out, realized)``: ``out[d]`` holds the visited node of every
    walk slot laid out back to back (``-1`` after a dead end) and
    ``realized[d, w]`` the number of steps walk ``w`` actually took.
    """
    starts = np.asarray(starts, dtype=np.int64)
    walk_lengths = np.asarray(walk_lengths, dtype=np.int64)
    n_docs, n_walks = len(starts), len(walk_lengths)
    offsets = np.zeros(n_walks + 1, dtype=np.int64)
    np.cumsum(walk_lengths, out=offsets[1:])
    out = np.full((n_docs, offsets[-1]), -1, dtype=np.int32)
    realized = np.zeros((n_docs, n_walks), dtype=np.int32)
    if n_docs == 0 or n_walks == 0 or len(indices) == 0:
        return out, realized

    degree = np.diff(indptr).astype(np.uint64)
    keys = np.asarray(keys, dtype=np.uint64)[:, None]
    for length in np.unique(walk_lengths):
        slots = np.flatnonzero(walk_lengths == length)
        cur = np.repeat(starts[:, None], len(slots), axis=1)
        alive = np.ones(cur.shape, dtype=bool)
        for step in range(int(length)):
            deg = degree[cur]
            alive &= deg > 0
            ctr = (slots * s + step + 1).astype(np.uint64)
            x = mix64(keys + ctr * GAMMA)
            pick = ((x >> _S32) * deg) >> _S32
            pos = np.where(alive, indptr[cur] + pick.astype(np.int64), 0)
            cur = np.where(alive, indices[pos], cur)
            out[:, offsets[slots] + step] = np.where(alive, cur, -1)
            realized[:, slots] += alive
    return out, realized

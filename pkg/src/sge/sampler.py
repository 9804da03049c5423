"""Order-aware random walk sampling driven by a walk-length distribution.

Every start node gets ``nu`` walks whose lengths follow the distribution
vector ``w``.  Each step stores the visited node together with its step
index, so a node's document is a multiset of ``(node, order)`` tuples.

Random draws come from a counter-based generator keyed on ``(seed, start
node, walk slot, step)``.  Results therefore do not depend on scheduling,
worker count, or which kernel backend is active.
"""
from __future__ import annotations

import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _walk_py
from ._arrays import read_arrays, write_arrays
from .errors import ValidationError
from .graph import Graph

try:
    from . import _walk_core
except ImportError:  # extension not built
    _walk_core = None

log = logging.getLogger(__name__)

__all__ = [
    "BACKEND",
    "available_backends",
    "WalkDistributionVector",
    "SamplerConfig",
    "NodeDocument",
    "WalkCorpus",
    "generate_sampling_vector",
    "walk",
    "sample_node",
    "sample_all",
    "sample_bfs2",
]

DISTRIBUTIONS = ("uniform", "explicit", "bfs2")

_KERNELS = {"python": _walk_py.sample_walks}
if _walk_core is not None:
    _KERNELS["cython"] = _walk_core.sample_walks

BACKEND = ("cython" if "cython" in _KERNELS and not os.environ.get("SGE_PURE_PYTHON")
           else "python")

# docs x walk-slots entries materialised per kernel call
_CHUNK_ENTRIES = 1 << 24


def available_backends() -> list:
    return sorted(_KERNELS)


def _kernel(backend):
    backend = backend or BACKEND
    try:
        return _KERNELS[backend]
    except KeyError:
        raise ValidationError(f"walk backend {backend!r} is not available "
                              f"(have: {', '.join(available_backends())})") from None


def default_workers() -> int:
    env = os.environ.get("SGE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class WalkDistributionVector:
    """Proportions ``w`` over walk lengths ``1..s`` and their integer split of ``nu``."""

    w: np.ndarray
    nu: int
    realized_counts: np.ndarray

    @property
    def s(self) -> int:
        return len(self.w)

    def walk_lengths(self) -> np.ndarray:
        """Requested length of every walk slot, grouped by ascending length."""
        return np.repeat(np.arange(1, self.s + 1, dtype=np.int64), self.realized_counts)

    def mean_length(self) -> float:
        return float(np.dot(np.arange(1, self.s + 1), self.realized_counts) / self.nu)


def _largest_remainder(w: np.ndarray, nu: int) -> np.ndarray:
    raw = w * nu
    counts = np.floor(raw).astype(np.int64)
    short = nu - int(counts.sum())
    if short > 0:
        # stable sort: equal remainders go to the shorter length first
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def generate_sampling_vector(kind: str = "uniform", s: Optional[int] = None, nu: int = 1000,
                             w: Optional[Sequence[float]] = None) -> WalkDistributionVector:
    """Build the walk distribution vector for ``kind`` and split ``nu`` walks over it.

    ``kind="explicit"`` takes the proportions from ``w``; ``s`` may then be
    omitted.  Counts use largest-remainder rounding so they sum to ``nu``.
    """
    if nu < 1:
        raise ValidationError(f"nu must be >= 1, got {nu}")
    if kind == "uniform":
        if s is None or s < 1:
            raise ValidationError(f"s must be >= 1, got {s}")
        vec = np.full(s, 1.0 / s)
    elif kind == "explicit":
        if w is None:
            raise ValidationError("explicit distribution needs a weight vector")
        vec = np.asarray(w, dtype=float)
        if vec.ndim != 1 or len(vec) == 0:
            raise ValidationError("weight vector must be a non-empty 1-D sequence")
        if s is not None and s != len(vec):
            raise ValidationError(f"weight vector has length {len(vec)}, expected s={s}")
        if not np.all(np.isfinite(vec)) or np.any(vec < 0):
            raise ValidationError("walk length proportions must be finite and non-negative")
        if abs(vec.sum() - 1.0) > 1e-9:
            raise ValidationError(f"walk length proportions sum to {vec.sum():.12g}, not 1")
    elif kind == "bfs2":
        raise ValidationError("bfs2 sampling is deterministic and has no walk distribution")
    else:
        raise ValidationError(f"unknown distribution kind {kind!r}")
    return WalkDistributionVector(vec, int(nu), _largest_remainder(vec, int(nu)))


@dataclass(frozen=True)
class SamplerConfig:
    distribution_kind: str = "uniform"
    s: int = 5
    nu: int = 1000
    seed: int = 0
    include_start_node: bool = False
    w: Optional[tuple] = None

    def __post_init__(self):
        if self.distribution_kind not in DISTRIBUTIONS:
            raise ValidationError(f"unknown distribution kind {self.distribution_kind!r}")
        if self.distribution_kind == "explicit" and self.w is not None:
            object.__setattr__(self, "s", len(self.w))
        if self.s < 1:
            raise ValidationError(f"s must be >= 1, got {self.s}")
        if self.nu < 1:
            raise ValidationError(f"nu must be >= 1, got {self.nu}")

    def distribution(self) -> WalkDistributionVector:
        return generate_sampling_vector(self.distribution_kind, self.s, self.nu, self.w)

    def as_dict(self) -> dict:
        return {"distribution": self.distribution_kind, "s": self.s, "nu": self.nu,
                "seed": self.seed, "include_start_node": self.include_start_node,
                "w": None if self.w is None else list(self.w)}


@dataclass
class NodeDocument:
    """All walks from one start node; ``walks[i]`` is a list of ``(node, order)``."""

    start_node: int
    walks: list = field(default_factory=list)

    @property
    def tuples(self) -> Counter:
        return Counter(t for wk in self.walks for t in wk)

    def __len__(self):
        return sum(len(wk) for wk in self.walks)


@dataclass(eq=False)
class WalkCorpus:
    """Walk tuples for a set of start nodes, stored as flat arrays.

    Document ``i`` (start node ``doc_nodes[i]``) owns walks
    ``doc_ptr[i]:doc_ptr[i+1]``; walk ``j`` owns tuples
    ``walk_ptr[j]:walk_ptr[j+1]``.  ``walk_requested`` records the length
    each walk was asked for, which can exceed its realised length at dead ends.
    """

    names: tuple
    doc_nodes: np.ndarray
    doc_ptr: np.ndarray
    walk_ptr: np.ndarray
    walk_requested: np.ndarray
    tok_node: np.ndarray
    tok_order: np.ndarray
    config: dict = field(default_factory=dict)

    MAGIC = b"SGEWALKS"
    VERSION = 1

    @property
    def num_docs(self) -> int:
        return len(self.doc_nodes)

    @property
    def num_tuples(self) -> int:
        return len(self.tok_node)

    def document(self, i: int) -> NodeDocument:
        walks = []
        for j in range(self.doc_ptr[i], self.doc_ptr[i + 1]):
            lo, hi = self.walk_ptr[j], self.walk_ptr[j + 1]
            walks.append(list(zip(self.tok_node[lo:hi].tolist(),
                                  self.tok_order[lo:hi].tolist())))
        return NodeDocument(int(self.doc_nodes[i]), walks)

    def documents(self):
        return [self.document(i) for i in range(self.num_docs)]

    def doc_of_tuple(self) -> np.ndarray:
        walk_doc = np.repeat(np.arange(self.num_docs), np.diff(self.doc_ptr))
        return np.repeat(walk_doc, np.diff(self.walk_ptr))

    def save(self, path) -> None:
        meta = {"names": list(self.names), "config": self.config}
        write_arrays(path, self.MAGIC, self.VERSION, meta, {
            "doc_nodes": self.doc_nodes.astype(np.int64),
            "doc_ptr": self.doc_ptr.astype(np.int64),
            "walk_ptr": self.walk_ptr.astype(np.int64),
            "walk_requested": self.walk_requested.astype(np.int32),
            "tok_node": self.tok_node.astype(np.int32),
            "tok_order": self.tok_order.astype(np.int32),
        })

    @classmethod
    def load(cls, path) -> "WalkCorpus":
        meta, a = read_arrays(path, cls.MAGIC, cls.VERSION)
        return cls(tuple(meta["names"]), a["doc_nodes"], a["doc_ptr"], a["walk_ptr"],
                   a["walk_requested"], a["tok_node"], a["tok_order"], meta["config"])

    def write_dump(self, path) -> None:
        """Human-readable dump: ``name <tab> (neighbor,order):count ...`` per document."""
        with open(path, "w", encoding="utf-8") as fh:
            for i in range(self.num_docs):
                doc = self.document(i)
                items = sorted(doc.tuples.items())
                body = " ".join(f"({self.names[n]},{o}):{c}" for (n, o), c in items)
                fh.write(f"{self.names[doc.start_node]}\t{body}\n")


def _concat_corpora(names, parts, config) -> WalkCorpus:
    doc_nodes = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, np.int64)
    walks_per_doc = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0, np.int64)
    walk_len = np.concatenate([p[2] for p in parts]) if parts else np.zeros(0, np.int64)
    requested = np.concatenate([p[3] for p in parts]) if parts else np.zeros(0, np.int32)
    tok_node = np.concatenate([p[4] for p in parts]) if parts else np.zeros(0, np.int32)
    tok_order = np.concatenate([p[5] for p in parts]) if parts else np.zeros(0, np.int32)
    doc_ptr = np.zeros(len(doc_nodes) + 1, dtype=np.int64)
    np.cumsum(walks_per_doc, out=doc_ptr[1:])
    walk_ptr = np.zeros(len(walk_len) + 1, dtype=np.int64)
    np.cumsum(walk_len, out=walk_ptr[1:])
    return WalkCorpus(tuple(names), doc_nodes.astype(np.int64), doc_ptr, walk_ptr,
                      requested.astype(np.int32), tok_node.astype(np.int32),
                      tok_order.astype(np.int32), dict(config))


def _run_walks(g: Graph, starts, dist: WalkDistributionVector, seed: int,
               include_start: bool, workers: int, backend: Optional[str]):
    """Sample all walks for ``starts``; returns the per-chunk array tuple."""
    kernel = _kernel(backend)
    lengths = dist.walk_lengths()
    n_walks = len(lengths)
    offsets = np.zeros(n_walks + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    slot_order = (np.arange(offsets[-1]) - np.repeat(offsets[:-1], lengths) + 1).astype(np.int32)
    chunk = max(1, _CHUNK_ENTRIES // max(1, int(offsets[-1])))
    parts = []
    for lo in range(0, len(starts), chunk):
        st = np.asarray(starts[lo:lo + chunk], dtype=np.int64)
        keys = _walk_py.node_keys(seed, st)
        out, realized = kernel(g.indptr, g.indices, st, keys, lengths, dist.s, workers)
        mask = out >= 0
        tok_node = out[mask]
        tok_order = np.broadcast_to(slot_order, out.shape)[mask]
        walk_len = realized.ravel().astype(np.int64)
        requested = np.tile(lengths, len(st)).astype(np.int32)
        if include_start:
            # prepend (start, 0) to every walk
            walk_doc_start = np.repeat(st, n_walks)
            insert_at = np.zeros(len(walk_len), dtype=np.int64)
            np.cumsum(walk_len[:-1], out=insert_at[1:])
            tok_node = np.insert(tok_node, insert_at, walk_doc_start.astype(np.int32))
            tok_order = np.insert(tok_order, insert_at, 0)
            walk_len = walk_len + 1
        parts.append((st, np.full(len(st), n_walks, dtype=np.int64), walk_len, requested,
                      tok_node, tok_order))
    return parts


def _check_node(g: Graph, start: int):
    if not 0 <= start < g.num_nodes:
        raise IndexError(f"node index {start} out of range for {g.num_nodes} nodes")


def walk(g: Graph, start: int, length: int, seed: int = 0, walk_index: int = 0,
         backend: Optional[str] = None) -> list:
    """One order-aware walk of up to ``length`` steps from ``start``.

    Returns ``[(node, order), ...]`` for the visited nodes only; the walk
    stops early at a node without out-neighbours.  ``walk_index`` selects an
    independent random stream for the same ``(seed, start)``.
    """
    _check_node(g, start)
    if length < 1:
        raise ValidationError(f"walk length must be >= 1, got {length}")
    lengths = np.zeros(walk_index + 1, dtype=np.int64)
    lengths[walk_index] = length
    keys = _walk_py.node_keys(seed, [start])
    out, realized = _kernel(backend)(g.indptr, g.indices, np.array([start]), keys,
                                     lengths, length, 1)
    steps = out[0, :realized[0, walk_index]]
    return [(int(n), a + 1) for a, n in enumerate(steps)]


def sample_node(g: Graph, start: int, dist: WalkDistributionVector, seed: int = 0,
                include_start_node: bool = False, backend: Optional[str] = None
                ) -> NodeDocument:
    """Simulate every walk ``dist`` prescribes from ``start``.

    Identical to document ``start`` of :func:`sample_all` with the same seed.
    """
    _check_node(g, start)
    parts = _run_walks(g, [start], dist, seed, include_start_node, 1, backend)
    return _concat_corpora(g.names, parts, {}).document(0)


def sample_bfs2(g: Graph, start: int) -> NodeDocument:
    """Deterministic order-two neighbourhood: distinct 1-hop and exactly-2-hop nodes.

    Each tuple is its own single-step segment, so k-grams never join them.
    """
    _check_node(g, start)
    hop1 = np.unique(g.out_neighbors(start))
    if len(hop1):
        hop2 = np.unique(np.concatenate([g.out_neighbors(int(v)) for v in hop1]))
    else:
        hop2 = hop1
    walks = [[(int(v), 1)] for v in hop1] + [[(int(v), 2)] for v in hop2]
    return NodeDocument(int(start), walks)


def _bfs2_corpus(g: Graph, nodes, config) -> WalkCorpus:
    walks_per_doc, tok_node, tok_order = [], [], []
    for n in nodes:
        doc = sample_bfs2(g, int(n))
        walks_per_doc.append(len(doc.walks))
        for (v, o), in doc.walks:
            tok_node.append(v)
            tok_order.append(o)
    walk_len = np.ones(len(tok_node), dtype=np.int64)
    part = (np.asarray(nodes, dtype=np.int64), np.asarray(walks_per_doc, dtype=np.int64),
            walk_len, np.asarray(tok_order, dtype=np.int32),
            np.asarray(tok_node, dtype=np.int32), np.asarray(tok_order, dtype=np.int32))
    return _concat_corpora(g.names, [part], config)


def sample_all(g: Graph, cfg: SamplerConfig, nodes: Optional[Sequence[int]] = None,
               workers: Optional[int] = None, backend: Optional[str] = None) -> WalkCorpus:
    """Sample one document per node (all nodes by default, in index order)."""
    if nodes is None:
        nodes = np.arange(g.num_nodes, dtype=np.int64)
    else:
        nodes = np.asarray(nodes, dtype=np.int64)
        if len(nodes) and (nodes.min() < 0 or nodes.max() >= g.num_nodes):
            raise IndexError("requested node subset contains out-of-range indices")
    config = cfg.as_dict()
    if cfg.distribution_kind == "bfs2":
        return _bfs2_corpus(g, nodes, config)
    dist = cfg.distribution()
    config["realized_counts"] = dist.realized_counts.tolist()
    parts = _run_walks(g, nodes, dist, cfg.seed, cfg.include_start_node,
                       workers or default_workers(), backend)
    corpus = _concat_corpora(g.names, parts, config)
    log.info("sampled %d documents, %d tuples (backend=%s)", corpus.num_docs,
             corpus.num_tuples, backend or BACKEND)
    return corpus

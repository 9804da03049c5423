"""Typed directed multigraphs in compressed sparse row form.

Nodes are identified by their external string names.  Dense indices are
assigned in sorted-name order, so the same edge set always interns to the
same indices regardless of line order in the input file.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ParseError, ValidationError

__all__ = [
    "Graph",
    "LabelSet",
    "load_graph",
    "read_labels",
    "save_graph_cache",
    "load_graph_cache",
    "write_graph_tsv",
]

DEFAULT_NODE_TYPE = "node"

CACHE_MAGIC = b"SGEGRAPH"
CACHE_VERSION = 1


@dataclass(frozen=True)
class LabelSet:
    """Sparse node labelling: only labelled nodes are listed."""

    nodes: np.ndarray  # int64 node indices, strictly increasing
    classes: np.ndarray  # int64 class ids aligned with ``nodes``
    class_names: tuple

    def __post_init__(self):
        if len(self.nodes) != len(self.classes):
            raise ValidationError("label nodes and classes differ in length")
        if len(self.class_names) < 2:
            raise ValidationError(
                f"need at least 2 classes, got {len(self.class_names)}")
        if len(self.classes) and (self.classes.min() < 0
                                  or self.classes.max() >= len(self.class_names)):
            raise ValidationError("class id out of range")
        if len(self.nodes) > 1 and np.any(np.diff(self.nodes) <= 0):
            raise ValidationError("label nodes must be unique and sorted")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def __len__(self):
        return len(self.nodes)

    def as_dict(self) -> dict:
        return dict(zip(self.nodes.tolist(), self.classes.tolist()))


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable directed multigraph.

    ``indices[indptr[i]:indptr[i+1]]`` are the out-neighbours of node ``i``,
    sorted ascending; parallel edges appear repeatedly.
    """

    names: tuple
    indptr: np.ndarray
    indices: np.ndarray
    node_type: np.ndarray
    node_type_names: tuple = (DEFAULT_NODE_TYPE,)
    edge_type: Optional[np.ndarray] = None
    edge_type_names: tuple = ()
    labels: Optional[LabelSet] = None
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.names)
        if len(self.indptr) != n + 1:
            raise ValidationError("indptr must have num_nodes + 1 entries")
        if n and (self.indptr[0] != 0 or np.any(np.diff(self.indptr) < 0)):
            raise ValidationError("indptr must start at 0 and be non-decreasing")
        if self.indptr[-1] != len(self.indices):
            raise ValidationError("indptr[-1] must equal the number of edges")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= n):
            raise ValidationError("edge endpoint out of range")
        if len(self.node_type) != n:
            raise ValidationError("node_type must have one entry per node")
        if self.labels is not None and len(self.labels.nodes) \
                and self.labels.nodes.max() >= n:
            raise ValidationError("labelled node out of range")
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(self.names)})

    # construction -------------------------------------------------------

    @classmethod
    def from_edges(cls, edges: Iterable[Sequence[str]], node_types: Optional[dict] = None,
                   labels: Optional[dict] = None, symmetrize: bool = False,
                   extra_nodes: Iterable[str] = ()) -> "Graph":
        """Build a graph from ``(src, dst)`` or ``(src, dst, edge_type)`` name tuples.

        ``node_types`` and ``labels`` map node names to strings.  Nodes named
        only in ``node_types`` or ``extra_nodes`` become isolated nodes;
        labels naming unknown nodes are rejected.
        """
        srcs, dsts, etypes = [], [], []
        for edge in edges:
            srcs.append(edge[0])
            dsts.append(edge[1])
            etypes.append(edge[2] if len(edge) > 2 else "")
        node_types = node_types or {}
        names = sorted(set(srcs) | set(dsts) | set(node_types) | set(extra_nodes))
        index = {name: i for i, name in enumerate(names)}

        src = np.fromiter((index[s] for s in srcs), dtype=np.int64, count=len(srcs))
        dst = np.fromiter((index[d] for d in dsts), dtype=np.int64, count=len(dsts))
        etype_names = tuple(sorted(set(etypes))) if any(etypes) else ()
        if etype_names:
            ecode = {t: i for i, t in enumerate(etype_names)}
            et = np.fromiter((ecode[t] for t in etypes), dtype=np.int32, count=len(etypes))
        else:
            et = None
        if symmetrize:
            back = src != dst
            src, dst = np.concatenate([src, dst[back]]), np.concatenate([dst, src[back]])
            if et is not None:
                et = np.concatenate([et, et[back]])

        ntype_names = tuple(sorted(set(node_types.values()) | {DEFAULT_NODE_TYPE}))
        tcode = {t: i for i, t in enumerate(ntype_names)}
        default = tcode[DEFAULT_NODE_TYPE]
        node_type = np.array([tcode[node_types[name]] if name in node_types else default
                              for name in names], dtype=np.int32)

        label_set = None
        if labels:
            missing = sorted(set(labels) - set(index))
            if missing:
                raise ValidationError(
                    f"labels reference {len(missing)} unknown node(s), e.g. {missing[0]!r}")
            label_set = _make_labelset(labels, index)

        return cls._from_arrays(names, src, dst, node_type, ntype_names, et, etype_names,
                                label_set)

    @classmethod
    def _from_arrays(cls, names, src, dst, node_type, ntype_names, et, etype_names, labels):
        n = len(names)
        order = np.lexsort((dst, src))
        indices = dst[order].astype(np.int32)
        counts = np.bincount(src, minlength=n) if n else np.zeros(0, dtype=np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(names=tuple(names), indptr=indptr, indices=indices, node_type=node_type,
                   node_type_names=tuple(ntype_names),
                   edge_type=None if et is None else et[order],
                   edge_type_names=tuple(etype_names), labels=labels)

    # queries ------------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self.names)

    @property
    def num_edges(self) -> int:
        return len(self.indices)

    def out_neighbors(self, n: int) -> np.ndarray:
        if not 0 <= n < self.num_nodes:
            raise IndexError(f"node index {n} out of range for {self.num_nodes} nodes")
        return self.indices[self.indptr[n]:self.indptr[n + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown node {name!r}") from None

    def type_of(self, n: int) -> str:
        return self.node_type_names[self.node_type[n]]

    def with_labels(self, labels: Optional[LabelSet]) -> "Graph":
        return Graph(self.names, self.indptr, self.indices, self.node_type,
                     self.node_type_names, self.edge_type, self.edge_type_names, labels)

    def summary(self) -> dict:
        return {"nodes": self.num_nodes, "edges": self.num_edges,
                "labelled": 0 if self.labels is None else len(self.labels),
                "node_types": list(self.node_type_names)}

    def __repr__(self):
        return f"Graph(nodes={self.num_nodes}, edges={self.num_edges})"


def _make_labelset(labels: dict, index: dict) -> LabelSet:
    class_names = tuple(sorted(set(labels.values())))
    ccode = {c: i for i, c in enumerate(class_names)}
    pairs = sorted((index[name], ccode[c]) for name, c in labels.items())
    nodes = np.array([p[0] for p in pairs], dtype=np.int64)
    classes = np.array([p[1] for p in pairs], dtype=np.int64)
    return LabelSet(nodes, classes, class_names)


# text input -----------------------------------------------------------------

def _records(path, widths):
    """Yield ``(lineno, fields)`` from a tab-separated file, skipping comments."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in widths or not all(f.strip() for f in fields):
                raise ParseError(path, lineno,
                                 f"expected {' or '.join(map(str, widths))} tab-separated "
                                 f"fields, got {len(fields)}")
            yield lineno, [f.strip() for f in fields]


def _read_mapping(path, what):
    out = {}
    for lineno, (name, value) in _records(path, (2,)):
        if out.get(name, value) != value:
            raise ParseError(path, lineno, f"conflicting {what} for {name!r}")
        out[name] = value
    return out


def read_labels(path) -> dict:
    """Read a ``name <tab> class`` file into a dict."""
    return _read_mapping(path, "label")


def load_graph(edge_file, node_type_file=None, label_file=None,
               symmetrize: bool = False) -> Graph:
    """Load a graph from a tab-separated edge list plus optional type and label files."""
    edges = [fields for _, fields in _records(edge_file, (2, 3))]
    if not edges:
        raise ValidationError(f"{edge_file}: edge file contains no edges")
    node_types = _read_mapping(node_type_file, "node type") if node_type_file else None
    labels = read_labels(label_file) if label_file else None
    return Graph.from_edges(edges, node_types=node_types, labels=labels,
                            symmetrize=symmetrize)


def write_graph_tsv(g: Graph, edge_file, node_type_file=None, label_file=None):
    """Write ``g`` back out in the text formats accepted by :func:`load_graph`."""
    src = np.repeat(np.arange(g.num_nodes), g.out_degree())
    with open(edge_file, "w", encoding="utf-8") as fh:
        for e, (u, v) in enumerate(zip(src.tolist(), g.indices.tolist())):
            row = [g.names[u], g.names[v]]
            if g.edge_type is not None:
                row.append(g.edge_type_names[g.edge_type[e]])
            fh.write("\t".join(row) + "\n")
    if node_type_file is not None:
        with open(node_type_file, "w", encoding="utf-8") as fh:
            for i, name in enumerate(g.names):
                fh.write(f"{name}\t{g.type_of(i)}\n")
    if label_file is not None and g.labels is not None:
        with open(label_file, "w", encoding="utf-8") as fh:
            for n, c in zip(g.labels.nodes.tolist(), g.labels.classes.tolist()):
                fh.write(f"{g.names[n]}\t{g.labels.class_names[c]}\n")


# binary cache ---------------------------------------------------------------
#
# Layout, all integers little-endian:
#   8s   magic "SGEGRAPH"
#   u32  version
#   u64  num_nodes, num_edges, num_labelled, has_edge_types, strings_len
#   u64[num_nodes + 1]  indptr
#   u32[num_edges]      indices
#   i32[num_nodes]      node type codes
#   i32[num_edges]      edge type codes (only if has_edge_types)
#   u64[num_labelled]   labelled node indices
#   i32[num_labelled]   class ids
#   strings_len bytes   UTF-8 JSON: names, node_type_names, edge_type_names, class_names

_HEADER = struct.Struct("<8sIQQQQQ")


def save_graph_cache(g: Graph, path) -> None:
    strings = json.dumps({
        "names": list(g.names),
        "node_type_names": list(g.node_type_names),
        "edge_type_names": list(g.edge_type_names),
        "class_names": [] if g.labels is None else list(g.labels.class_names),
    }, ensure_ascii=False).encode("utf-8")
    nl = 0 if g.labels is None else len(g.labels)
    has_et = g.edge_type is not None
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, g.num_nodes, g.num_edges, nl,
                              int(has_et), len(strings)))
        fh.write(g.indptr.astype("<u8").tobytes())
        fh.write(g.indices.astype("<u4").tobytes())
        fh.write(g.node_type.astype("<i4").tobytes())
        if has_et:
            fh.write(g.edge_type.astype("<i4").tobytes())
        if nl:
            fh.write(g.labels.nodes.astype("<u8").tobytes())
            fh.write(g.labels.classes.astype("<i4").tobytes())
        fh.write(strings)


def load_graph_cache(path) -> Graph:
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _HEADER.size:
        raise ValidationError(f"{path}: truncated graph cache")
    magic, version, n, m, nl, has_et, slen = _HEADER.unpack_from(buf)
    if magic != CACHE_MAGIC:
        raise ValidationError(f"{path}: not a graph cache file")
    if version != CACHE_VERSION:
        raise ValidationError(f"{path}: unsupported cache version {version}")
    off = _HEADER.size

    def take(dtype, count):
        nonlocal off
        arr = np.frombuffer(buf, dtype=dtype, count=count, offset=off)
        off += arr.nbytes
        return arr

    indptr = take("<u8", n + 1).astype(np.int64)
    indices = take("<u4", m).astype(np.int32)
    node_type = take("<i4", n).astype(np.int32)
    edge_type = take("<i4", m).astype(np.int32) if has_et else None
    lnodes = take("<u8", nl).astype(np.int64)
    lclasses = take("<i4", nl).astype(np.int64)
    strings = json.loads(buf[off:off + slen].decode("utf-8"))
    labels = LabelSet(lnodes, lclasses, tuple(strings["class_names"])) if nl else None
    return Graph(tuple(strings["names"]), indptr, indices, node_type,
                 tuple(strings["node_type_names"]), edge_type,
                 tuple(strings["edge_type_names"]), labels)

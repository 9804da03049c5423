"""Evaluate a pattern vocabulary against node documents as a sparse matrix."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .mining import PatternVocabulary, TransactionDB, count_kgrams

__all__ = [
    "SCHEMES",
    "SymbolicEmbedding",
    "tfidf_weight",
    "represent_nodes",
    "export_embedding",
    "read_sparse_text",
]

SCHEMES = ("binary", "tf", "tfidf", "fp_binary")
_KGRAM_SCHEMES = ("binary", "tf", "tfidf")


def tfidf_weight(tf, num_docs, docs_containing):
    """``(1 + ln tf) * ln(num_docs / docs_containing)``; works on scalars and arrays."""
    if np.isscalar(tf) and np.isscalar(docs_containing):
        if tf < 1 or docs_containing < 1 or num_docs < docs_containing:
            raise ValidationError("need tf >= 1 and 1 <= docs_containing <= num_docs")
        return (1.0 + math.log(tf)) * math.log(num_docs / docs_containing)
    tf = np.asarray(tf, dtype=float)
    df = np.asarray(docs_containing, dtype=float)
    return (1.0 + np.log(tf)) * np.log(num_docs / df)


@dataclass(eq=False)
class SymbolicEmbedding:
    """Sparse node-by-pattern matrix; row ``i`` describes node ``row_nodes[i]``."""

    matrix: sp.csr_matrix
    row_nodes: np.ndarray
    names: tuple
    vocabulary: PatternVocabulary
    scheme: str

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def density(self) -> float:
        rows, cols = self.shape
        return self.nnz / (rows * cols) if rows and cols else 0.0

    def storage_bytes(self) -> int:
        m = self.matrix
        return int(m.data.nbytes + m.indices.nbytes + m.indptr.nbytes)

    def dense_bytes(self) -> int:
        rows, cols = self.shape
        return rows * cols * np.dtype(np.float64).itemsize

    def row_names(self) -> list:
        return [self.names[n] for n in self.row_nodes]

    def summary(self) -> dict:
        return {"rows": self.shape[0], "cols": self.shape[1], "nnz": self.nnz,
                "density": self.density(), "storage_bytes": self.storage_bytes(),
                "dense_bytes": self.dense_bytes(), "scheme": self.scheme}


def _check_scheme(scheme, vocab):
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown weighting scheme {scheme!r}")
    if vocab.kind == "itemset" and scheme != "fp_binary":
        raise ValidationError(f"scheme {scheme!r} needs a k-gram vocabulary; "
                              "itemset vocabularies only support fp_binary")
    if vocab.kind == "kgram" and scheme not in _KGRAM_SCHEMES:
        raise ValidationError("fp_binary needs an itemset vocabulary")


def _empty(db, vocab, scheme):
    m = sp.csr_matrix((db.num_docs, len(vocab)), dtype=np.float64)
    return SymbolicEmbedding(m, db.doc_nodes.copy(), db.names, vocab, scheme)


def _kgram_entries(db: TransactionDB, vocab: PatternVocabulary, scheme: str):
    k = vocab.max_length
    counts = count_kgrams(db, k)
    # vocabulary rows in the same shifted, zero-padded layout as counts.grams
    vrows = np.zeros((len(vocab), k), dtype=np.int64)
    known = np.ones(len(vocab), dtype=bool)
    for j, pat in enumerate(vocab.patterns):
        ids = db.token_ids([n for n, _ in pat], [o for _, o in pat])
        if np.any(ids < 0):
            known[j] = False
            continue
        vrows[j, :len(ids)] = ids + 1
    col_of_gram = np.full(len(counts.grams), -1, dtype=np.int64)
    cols = np.flatnonzero(known)
    found = _match_rows(counts.grams, vrows[cols])
    col_of_gram[found[found >= 0]] = cols[found >= 0]
    sel = col_of_gram[counts.gram] >= 0
    rows = counts.doc[sel]
    cols = col_of_gram[counts.gram[sel]]
    tf = counts.count[sel]
    if scheme == "binary":
        vals = np.ones(len(rows))
    elif scheme == "tf":
        vals = tf.astype(np.float64)
    else:
        df = counts.document_frequency()[counts.gram[sel]]
        vals = tfidf_weight(tf, db.num_docs, df)
    return rows, cols, vals


def _match_rows(haystack: np.ndarray, needles: np.ndarray) -> np.ndarray:
    """Index of each needle row in the lexicographically sorted ``haystack``, or -1."""
    if len(haystack) == 0 or len(needles) == 0:
        return np.full(len(needles), -1, dtype=np.int64)
    width = haystack.shape[1]
    base = int(max(haystack.max(), needles.max())) + 1
    if base ** width < 2 ** 62:
        radix = base ** np.arange(width - 1, -1, -1, dtype=np.int64)
        hkeys = haystack.astype(np.int64) @ radix
        nkeys = needles.astype(np.int64) @ radix
        pos = np.minimum(np.searchsorted(hkeys, nkeys), len(hkeys) - 1)
        return np.where(hkeys[pos] == nkeys, pos, -1)
    index = {tuple(r): i for i, r in enumerate(haystack.tolist())}
    return np.array([index.get(tuple(r), -1) for r in needles.tolist()], dtype=np.int64)


def _itemset_entries(db: TransactionDB, vocab: PatternVocabulary):
    doc = db.token_doc()
    presence = sp.csr_matrix((np.ones(len(doc)), (doc, db.tokens)),
                             shape=(db.num_docs, max(db.num_tokens, 1)))
    presence.data[:] = 1.0
    prow, pcol, sizes = [], [], np.zeros(len(vocab))
    for j, pat in enumerate(vocab.patterns):
        ids = db.token_ids([n for n, _ in pat], [o for _, o in pat])
        sizes[j] = len(pat)
        if np.all(ids >= 0):
            prow.extend([j] * len(ids))
            pcol.extend(ids.tolist())
        else:
            sizes[j] = np.inf
    pmat = sp.csr_matrix((np.ones(len(prow)), (prow, pcol)),
                         shape=(len(vocab), presence.shape[1]))
    hits = (presence @ pmat.T).tocoo()
    full = hits.data == sizes[hits.col]
    return hits.row[full], hits.col[full], np.ones(int(full.sum()))


def represent_nodes(db: TransactionDB, vocab: PatternVocabulary,
                    scheme: str = "binary") -> SymbolicEmbedding:
    """Feature matrix with one row per document and one column per pattern.

    ``binary``/``fp_binary`` store 1 where the pattern occurs, ``tf`` its
    count, ``tfidf`` the log-damped count times the log inverse document
    frequency over ``db``.  Zero weights are not stored.
    """
    _check_scheme(scheme, vocab)
    if len(vocab) == 0 or db.num_tokens == 0:
        return _empty(db, vocab, scheme)
    if vocab.kind == "kgram":
        rows, cols, vals = _kgram_entries(db, vocab, scheme)
    else:
        rows, cols, vals = _itemset_entries(db, vocab)
    keep = vals != 0
    m = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])),
                      shape=(db.num_docs, len(vocab)), dtype=np.float64)
    m.sort_indices()
    return SymbolicEmbedding(m, db.doc_nodes.copy(), db.names, vocab, scheme)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def export_embedding(m: SymbolicEmbedding, fmt: str, path) -> None:
    """Write ``m`` as ``sparse-text`` (``rows cols nnz`` + triples) or ``dense-csv``."""
    path = Path(path)
    try:
        if fmt == "sparse-text":
            coo = m.matrix.tocoo()
            order = np.lexsort((coo.col, coo.row))
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(f"{m.shape[0]} {m.shape[1]} {m.nnz}\n")
                for r, c, v in zip(coo.row[order].tolist(), coo.col[order].tolist(),
                                   coo.data[order].tolist()):
                    fh.write(f"{r} {c} {_fmt(v)}\n")
        elif fmt == "dense-csv":
            dense = m.matrix.toarray()
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["node"] + m.vocabulary.descriptions())
                for name, row in zip(m.row_names(), dense):
                    writer.writerow([name] + [_fmt(v) for v in row])
        else:
            raise ValidationError(f"unknown export format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write embedding to {path}: {exc.strerror}") from exc


def read_sparse_text(path) -> sp.csr_matrix:
    """Inverse of the ``sparse-text`` export."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValidationError(f"{path}: bad sparse-text header")
        rows, cols, nnz = map(int, header)
        data = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 3))
    if len(data) != nnz:
        raise ValidationError(f"{path}: header says {nnz} entries, found {len(data)}")
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(np.int64), data[:, 1].astype(np.int64))),
                         shape=(rows, cols))

"""Transaction database over walk tuples and pattern vocabulary extraction.

Two pattern families are supported:

* ``kgram``: contiguous runs of 1..k tuples inside a single walk, ranked by
  the number of documents containing them; the top ``d`` become features.
* ``itemset``: every set of tuples whose document support reaches a
  threshold, found with FP-growth over de-duplicated documents.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ValidationError
from .fptree import fpgrowth
from .sampler import NodeDocument, WalkCorpus

log = logging.getLogger(__name__)

__all__ = [
    "SGEWarning",
    "TransactionDB",
    "Pattern",
    "PatternVocabulary",
    "build_transaction_db",
    "mine_kgrams",
    "mine_fpgrowth",
    "count_kgrams",
]


class SGEWarning(UserWarning):
    """Degenerate but legal result, e.g. an empty vocabulary."""


@dataclass(eq=False)
class TransactionDB:
    """Node documents with tuples interned to dense token ids.

    Token ids follow ascending ``(node, order)``.  ``tokens`` is the flat
    sequence of token ids in sampling order; ``doc_ptr`` and ``walk_ptr``
    delimit documents (in walks) and walks (in tokens).
    """

    names: tuple
    doc_nodes: np.ndarray
    doc_ptr: np.ndarray
    walk_ptr: np.ndarray
    tokens: np.ndarray
    token_node: np.ndarray
    token_order: np.ndarray

    @property
    def num_docs(self) -> int:
        return len(self.doc_nodes)

    @property
    def num_tokens(self) -> int:
        return len(self.token_node)

    def token_ids(self, nodes, orders) -> np.ndarray:
        """Token ids of ``(node, order)`` pairs, ``-1`` where absent."""
        keys = _token_key(np.asarray(nodes), np.asarray(orders))
        own = _token_key(self.token_node, self.token_order)
        pos = np.searchsorted(own, keys)
        pos = np.minimum(pos, max(len(own) - 1, 0))
        hit = (own[pos] == keys) if len(own) else np.zeros(len(keys), bool)
        return np.where(hit, pos, -1)

    def walk_doc(self) -> np.ndarray:
        return np.repeat(np.arange(self.num_docs), np.diff(self.doc_ptr))

    def token_doc(self) -> np.ndarray:
        return np.repeat(self.walk_doc(), np.diff(self.walk_ptr))

    def token_sets(self) -> list:
        """Unique token ids of each document."""
        doc = self.token_doc()
        pairs = np.unique(doc.astype(np.int64) * max(self.num_tokens, 1) + self.tokens)
        d, t = np.divmod(pairs, max(self.num_tokens, 1))
        bounds = np.searchsorted(d, np.arange(self.num_docs + 1))
        return [t[bounds[i]:bounds[i + 1]].tolist() for i in range(self.num_docs)]

    def describe_token(self, t: int) -> str:
        return f"({self.names[self.token_node[t]]},{self.token_order[t]})"


def _token_key(nodes, orders):
    # order <= 2**20 leaves room for 2**43 nodes
    return nodes.astype(np.int64) << 20 | orders.astype(np.int64)


def _from_documents(docs: Sequence[NodeDocument], names) -> WalkCorpus:
    doc_nodes, walks_per_doc, walk_len, tok_node, tok_order = [], [], [], [], []
    for doc in docs:
        doc_nodes.append(doc.start_node)
        walks_per_doc.append(len(doc.walks))
        for wk in doc.walks:
            walk_len.append(len(wk))
            for node, order in wk:
                tok_node.append(node)
                tok_order.append(order)
    doc_ptr = np.concatenate([[0], np.cumsum(walks_per_doc, dtype=np.int64)])
    walk_ptr = np.concatenate([[0], np.cumsum(walk_len, dtype=np.int64)])
    if names is None:
        top = max(doc_nodes + tok_node, default=-1)
        names = tuple(str(i) for i in range(top + 1))
    return WalkCorpus(tuple(names), np.asarray(doc_nodes, np.int64), doc_ptr.astype(np.int64),
                      walk_ptr.astype(np.int64), np.asarray(walk_len, np.int32),
                      np.asarray(tok_node, np.int32), np.asarray(tok_order, np.int32))


def build_transaction_db(documents: Union[WalkCorpus, Sequence[NodeDocument]],
                         names=None) -> TransactionDB:
    """Intern walk tuples to dense token ids; documents keep their given order."""
    corpus = documents if isinstance(documents, WalkCorpus) else \
        _from_documents(list(documents), names)
    if corpus.num_docs == 0:
        raise ValidationError("cannot build a transaction database from zero documents")
    keys = _token_key(corpus.tok_node, corpus.tok_order)
    uniq, inverse = np.unique(keys, return_inverse=True)
    return TransactionDB(
        names=corpus.names,
        doc_nodes=np.asarray(corpus.doc_nodes, dtype=np.int64),
        doc_ptr=np.asarray(corpus.doc_ptr, dtype=np.int64),
        walk_ptr=np.asarray(corpus.walk_ptr, dtype=np.int64),
        tokens=inverse.reshape(-1).astype(np.int64),
        token_node=(uniq >> 20).astype(np.int64),
        token_order=(uniq & ((1 << 20) - 1)).astype(np.int64),
    )


@dataclass(frozen=True)
class Pattern:
    tokens: tuple
    kind: str
    frequency: int


@dataclass(eq=False)
class PatternVocabulary:
    """Selected patterns, one per embedding column.

    Patterns are expressed as ``(node, order)`` tuples so a vocabulary can
    be applied to any transaction database over the same graph.
    """

    kind: str
    patterns: list  # list of tuples of (node, order)
    frequencies: list
    names: tuple
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.patterns)

    @property
    def max_length(self) -> int:
        return max((len(p) for p in self.patterns), default=0)

    def describe(self, j: int) -> str:
        return ";".join(f"({self.names[n]},{o})" for n, o in self.patterns[j])

    def descriptions(self) -> list:
        return [self.describe(j) for j in range(len(self))]

    def as_patterns(self, db: TransactionDB) -> list:
        """Patterns as :class:`Pattern` objects with token ids of ``db``."""
        out = []
        for pat, freq in zip(self.patterns, self.frequencies):
            ids = db.token_ids([n for n, _ in pat], [o for _, o in pat]) if pat else []
            out.append(Pattern(tuple(int(i) for i in ids), self.kind, int(freq)))
        return out

    def write(self, path) -> None:
        """One pattern per line: ``column <tab> frequency <tab> (name,order);...``."""
        with open(path, "w", encoding="utf-8") as fh:
            for j, freq in enumerate(self.frequencies):
                fh.write(f"{j}\t{freq}\t{self.describe(j)}\n")


def _vocab(db: TransactionDB, kind, token_rows, freqs, params) -> PatternVocabulary:
    patterns = [tuple((int(db.token_node[t]), int(db.token_order[t])) for t in row)
                for row in token_rows]
    return PatternVocabulary(kind, patterns, [int(f) for f in freqs], db.names, params)


# k-grams --------------------------------------------------------------------

def _row_ids(rows: np.ndarray):
    """Lexicographically ordered unique rows of a non-negative int matrix + inverse."""
    if rows.shape[0] == 0:
        return rows, np.zeros(0, dtype=np.int64)
    base = int(rows.max()) + 1
    width = rows.shape[1]
    if base ** width < 2 ** 62:
        radix = base ** np.arange(width - 1, -1, -1, dtype=np.int64)
        keys = rows.astype(np.int64) @ radix
        uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        return rows[first], inverse.reshape(-1)
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    return uniq, inverse.reshape(-1)


@dataclass
class GramCounts:
    """Per-document occurrence counts of every k-gram in a database.

    ``grams`` rows are token ids shifted by one and right-padded with 0, so
    row order is lexicographic with shorter prefixes first.
    """

    grams: np.ndarray
    doc: np.ndarray
    gram: np.ndarray
    count: np.ndarray

    def document_frequency(self) -> np.ndarray:
        return np.bincount(self.gram, minlength=len(self.grams))

    def gram_tokens(self, g: int) -> tuple:
        row = self.grams[g]
        return tuple(int(t) - 1 for t in row[row > 0])


def count_kgrams(db: TransactionDB, k: int) -> GramCounts:
    """Count contiguous 1..k grams that stay within one walk."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    n_tok = len(db.tokens)
    tok_walk = np.repeat(np.arange(len(db.walk_ptr) - 1), np.diff(db.walk_ptr))
    tok_doc = db.token_doc()
    shifted = db.tokens + 1
    rows, docs = [], []
    for n in range(1, k + 1):
        if n_tok < n:
            break
        starts = np.arange(n_tok - n + 1)
        ok = tok_walk[starts] == tok_walk[starts + n - 1]
        starts = starts[ok]
        block = np.zeros((len(starts), k), dtype=np.int64)
        for j in range(n):
            block[:, j] = shifted[starts + j]
        rows.append(block)
        docs.append(tok_doc[starts])
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return GramCounts(np.zeros((0, k), dtype=np.int64), empty, empty, empty)
    rows = np.concatenate(rows)
    docs = np.concatenate(docs).astype(np.int64)
    grams, gid = _row_ids(rows)
    pair = docs * len(grams) + gid
    upair, cnt = np.unique(pair, return_counts=True)
    doc, gram = np.divmod(upair, len(grams))
    return GramCounts(grams, doc, gram, cnt.astype(np.int64))


def mine_kgrams(db: TransactionDB, k: int, d: int) -> PatternVocabulary:
    """Top ``d`` k-grams (orders 1..k) by document frequency.

    Ties are broken by lexicographic token-id order.
    """
    if d < 1:
        raise ValidationError(f"d must be >= 1, got {d}")
    counts = count_kgrams(db, k)
    df = counts.document_frequency()
    order = np.argsort(-df, kind="stable")[:d]
    params = {"k": k, "d": d}
    if len(order) < d:
        msg = (f"only {len(order)} distinct k-grams available, fewer than d={d}"
               if len(order) else "no k-grams found; vocabulary is empty")
        warnings.warn(msg, SGEWarning, stacklevel=2)
    rows = [counts.gram_tokens(g) for g in order]
    return _vocab(db, "kgram", rows, df[order], params)


# itemsets -------------------------------------------------------------------

def mine_fpgrowth(db: TransactionDB, support: int, min_size: Optional[int] = None,
                  max_size: Optional[int] = None) -> PatternVocabulary:
    """Every itemset of unique tuples present in at least ``support`` documents.

    Columns are ordered by descending support, then size, then token ids.
    """
    if support < 1:
        raise ValidationError(f"support must be >= 1, got {support}")
    if max_size is not None and max_size < 1:
        raise ValidationError(f"max_size must be >= 1, got {max_size}")
    params = {"support": support, "min_size": min_size, "max_size": max_size}
    if support > db.num_docs:
        warnings.warn(f"support {support} exceeds the {db.num_docs} transactions; "
                      "vocabulary is empty", SGEWarning, stacklevel=2)
        return _vocab(db, "itemset", [], [], params)
    found = fpgrowth(db.token_sets(), support, max_size=max_size)
    items = [(s, c) for s, c in found.items() if min_size is None or len(s) >= min_size]
    items.sort(key=lambda sc: (-sc[1], len(sc[0]), sc[0]))
    if not items:
        warnings.warn("no frequent itemsets at this support; vocabulary is empty",
                      SGEWarning, stacklevel=2)
    log.info("fp-growth: %d frequent itemsets at support %d", len(items), support)
    return _vocab(db, "itemset", [s for s, _ in items], [c for _, c in items], params)

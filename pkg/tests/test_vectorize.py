import csv
import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_kgrams, tfidf_by_hand
from sge.errors import ValidationError
from sge.mining import build_transaction_db, mine_fpgrowth, mine_kgrams
from sge.sampler import NodeDocument, SamplerConfig, sample_all
from sge.vectorize import (SymbolicEmbedding, export_embedding, read_sparse_text,
                           represent_nodes, tfidf_weight)

T, U = (1, 1), (2, 1)


def db_of(*docs):
    return build_transaction_db([NodeDocument(i, list(map(list, d))) for i, d in enumerate(docs)])


def test_tfidf_examples():
    assert tfidf_weight(1, 100, 10) == pytest.approx(2.302585, abs=1e-6)
    # (1 + ln 2) * ln 10, evaluated by hand: 1.6931472 * 2.3025851
    assert tfidf_weight(2, 100, 10) == pytest.approx(3.8986155, abs=1e-6)
    assert tfidf_weight(7, 100, 100) == 0.0


def test_tfidf_rejects_zero_tf():
    with pytest.raises(ValidationError):
        tfidf_weight(0, 10, 2)


def test_binary_and_tf_values():
    db = db_of([[T], [T], [T]], [[U]], [])
    vocab = mine_kgrams(db, 1, 2)
    col = vocab.patterns.index((T,))
    binary = represent_nodes(db, vocab, "binary").matrix.toarray()
    tf = represent_nodes(db, vocab, "tf").matrix.toarray()
    assert binary[0, col] == 1 and tf[0, col] == 3
    assert binary[1, col] == 0
    assert not binary[2].any()


def test_scheme_compatibility():
    db = db_of([[T, U]], [[T]])
    with pytest.raises(ValidationError):
        represent_nodes(db, mine_fpgrowth(db, 1), "tf")
    with pytest.raises(ValidationError):
        represent_nodes(db, mine_kgrams(db, 1, 2), "fp_binary")
    with pytest.raises(ValidationError):
        represent_nodes(db, mine_kgrams(db, 1, 2), "bm25")


def test_fp_binary_values():
    a, b, c = (1, 1), (2, 1), (3, 2)
    db = db_of([[a, b, b]], [[b], [c]], [[a], [b, c]])
    vocab = mine_fpgrowth(db, 2)
    m = represent_nodes(db, vocab, "fp_binary").matrix.toarray()
    docs = [{a, b}, {b, c}, {a, b, c}]
    for j, pat in enumerate(vocab.patterns):
        for i, doc in enumerate(docs):
            assert m[i, j] == (1.0 if set(pat) <= doc else 0.0)


docs_strategy = st.lists(st.lists(st.lists(st.integers(0, 4), max_size=5), max_size=4),
                         min_size=2, max_size=15)


@settings(max_examples=80, deadline=None)
@given(docs_strategy, st.integers(1, 3))
def test_schemes_agree_with_recount(raw_docs, k):
    docs = [[[(t, 1) for t in w] for w in doc] for doc in raw_docs]
    db = db_of(*docs)
    if db.num_tokens == 0:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vocab = mine_kgrams(db, k, 1000)
    n = db.num_docs
    b = represent_nodes(db, vocab, "binary").matrix.toarray()
    tf = represent_nodes(db, vocab, "tf").matrix.toarray()
    tfidf = represent_nodes(db, vocab, "tfidf").matrix.toarray()
    df, _ = brute_force_kgrams(docs, k)
    for i, doc in enumerate(docs):
        _, counts = brute_force_kgrams([doc], k)
        for j, pat in enumerate(vocab.patterns):
            c = counts.get(pat, 0)
            assert tf[i, j] == c
            assert b[i, j] == (1 if c else 0)
            if c and df[pat] < n:
                assert tfidf[i, j] > 0
                assert abs(tfidf[i, j] - tfidf_by_hand(c, n, df[pat])) < 1e-9
            else:
                assert tfidf[i, j] == 0


def test_empty_document_row_is_zero(random_graph):
    corpus = sample_all(random_graph, SamplerConfig(s=3, nu=10, seed=1))
    db = build_transaction_db(corpus)
    emb = represent_nodes(db, mine_kgrams(db, 2, 50), "binary")
    empty = [i for i in range(corpus.num_docs) if len(corpus.document(i)) == 0]
    assert empty
    assert emb.matrix[empty].nnz == 0


def _tiny_embedding(matrix):
    db = db_of([[T, U]], [[T]])
    vocab = mine_kgrams(db, 1, 2)
    return SymbolicEmbedding(sp.csr_matrix(matrix), np.arange(matrix.shape[0]), db.names,
                             vocab, "binary")


def test_sparse_text_examples(tmp_path):
    emb = _tiny_embedding(np.array([[0.0, 1.0], [0.0, 0.0]]))
    export_embedding(emb, "sparse-text", tmp_path / "m.txt")
    assert (tmp_path / "m.txt").read_text() == "2 2 1\n0 1 1\n"
    export_embedding(_tiny_embedding(np.zeros((2, 2))), "sparse-text", tmp_path / "z.txt")
    assert (tmp_path / "z.txt").read_text() == "2 2 0\n"
    assert read_sparse_text(tmp_path / "z.txt").shape == (2, 2)


def test_sparse_text_round_trip(tmp_path, random_graph):
    db = build_transaction_db(sample_all(random_graph, SamplerConfig(s=3, nu=15, seed=2)))
    emb = represent_nodes(db, mine_kgrams(db, 2, 80), "tfidf")
    export_embedding(emb, "sparse-text", tmp_path / "m.txt")
    back = read_sparse_text(tmp_path / "m.txt")
    assert back.shape == emb.shape
    assert (back != emb.matrix).nnz == 0


def test_dense_csv(tmp_path):
    db = build_transaction_db([NodeDocument(0, [[(1, 1), (2, 2)]]), NodeDocument(1, [[(2, 1)]])],
                              names=("s", "x", "y"))
    vocab = mine_kgrams(db, 2, 4)
    emb = represent_nodes(db, vocab, "binary")
    export_embedding(emb, "dense-csv", tmp_path / "m.csv")
    with open(tmp_path / "m.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["node"] + vocab.descriptions()
    assert [r[0] for r in rows[1:]] == ["s", "x"]
    assert np.array_equal(np.array(rows[1:])[:, 1:].astype(float), emb.matrix.toarray())


def test_export_errors(tmp_path):
    emb = _tiny_embedding(np.eye(2))
    with pytest.raises(ValidationError):
        export_embedding(emb, "parquet", tmp_path / "m")
    with pytest.raises(OSError, match="no_such_dir"):
        export_embedding(emb, "sparse-text", tmp_path / "no_such_dir" / "m.txt")


def test_summary_reports_density():
    emb = _tiny_embedding(np.array([[1.0, 0.0], [0.0, 0.0]]))
    s = emb.summary()
    assert s["density"] == 0.25 and s["nnz"] == 1
    assert s["dense_bytes"] == 32
    assert math.isclose(emb.density(), 0.25)

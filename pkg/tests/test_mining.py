import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_itemsets, brute_force_kgrams, top_d
from sge.errors import ValidationError
from sge.fptree import fpgrowth
from sge.mining import (SGEWarning, build_transaction_db, count_kgrams, mine_fpgrowth,
                        mine_kgrams)
from sge.sampler import NodeDocument, SamplerConfig, sample_all

B, C = (1, 1), (2, 2)


def db_of(*docs):
    """Each doc is a list of walks; each walk a list of (node, order) tuples."""
    return build_transaction_db([NodeDocument(i, list(map(list, d))) for i, d in enumerate(docs)])


def test_build_db_examples():
    db = db_of([[B], [B]], [[B], [C]])
    assert (db.num_tokens, db.num_docs) == (2, 2)
    db = db_of([[B]])
    assert (db.num_tokens, db.num_docs) == (1, 1)
    db = db_of([], [[]])
    assert (db.num_tokens, db.num_docs) == (0, 2)
    with pytest.raises(ValidationError):
        build_transaction_db([])


def test_token_ids_follow_node_order():
    db = db_of([[(5, 1), (3, 2)], [(3, 1)]])
    assert list(zip(db.token_node.tolist(), db.token_order.tolist())) == [(3, 1), (3, 2), (5, 1)]
    assert db.token_ids([5, 9], [1, 1]).tolist() == [2, -1]


def test_kgram_exhaustive_small():
    with pytest.warns(SGEWarning):
        vocab = mine_kgrams(db_of([[B, C]]), k=2, d=10)
    assert sorted(vocab.patterns) == sorted([(B,), (C,), (B, C)])


def test_kgram_top_by_document_frequency():
    t, u = (1, 1), (2, 1)
    vocab = mine_kgrams(db_of([[t]], [[t], [u]]), k=1, d=1)
    assert vocab.patterns == [(t,)] and vocab.frequencies == [2]


def test_kgrams_do_not_cross_walks():
    with pytest.warns(SGEWarning):
        vocab = mine_kgrams(db_of([[B], [C]]), k=2, d=10)
    assert all(len(p) == 1 for p in vocab.patterns)


def test_fewer_patterns_than_d_warns():
    with pytest.warns(SGEWarning):
        vocab = mine_kgrams(db_of([[B]]), k=2, d=5)
    assert len(vocab) == 1
    with pytest.warns(SGEWarning, match="empty"):
        assert len(mine_kgrams(db_of([[]]), k=2, d=5)) == 0


docs_strategy = st.lists(                     # documents
    st.lists(                                  # walks
        st.lists(st.integers(0, 5), max_size=5),
        max_size=4),
    min_size=1, max_size=20)


@settings(max_examples=150, deadline=None)
@given(docs_strategy, st.integers(1, 4), st.integers(1, 30))
def test_kgrams_match_brute_force(raw_docs, k, d):
    # token t -> tuple (t, 1): ids coincide with t's rank among present tokens
    docs = [[[(t, 1) for t in walk] for walk in doc] for doc in raw_docs]
    db = db_of(*docs)
    df, _ = brute_force_kgrams(docs, k)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SGEWarning)
        vocab = mine_kgrams(db, k, d)
    expected = top_d(df, d)
    assert vocab.patterns == expected
    assert vocab.frequencies == [df[g] for g in expected]


@settings(max_examples=60, deadline=None)
@given(docs_strategy, st.integers(1, 3))
def test_kgram_counts_recount(raw_docs, k):
    docs = [[[(t, 1) for t in walk] for walk in doc] for doc in raw_docs]
    db = db_of(*docs)
    counts = count_kgrams(db, k)
    df = counts.document_frequency()
    for g in range(len(counts.grams)):
        gram = tuple((int(db.token_node[t]), 1) for t in counts.gram_tokens(g))
        containing = sum(any(tuple(w[i:i + len(gram)]) == gram
                             for w in doc for i in range(len(w) - len(gram) + 1))
                         for doc in docs)
        assert df[g] == containing


def test_fpgrowth_worked_example():
    A, Bt, Ct = 0, 1, 2
    got = fpgrowth([{A, Bt}, {Bt, Ct}, {A, Bt, Ct}], 2)
    assert got == {(A,): 2, (Bt,): 3, (Ct,): 2, (A, Bt): 2, (Bt, Ct): 2}
    assert got == brute_force_itemsets([{A, Bt}, {Bt, Ct}, {A, Bt, Ct}], 2)


def test_fpgrowth_support_one():
    assert fpgrowth([{7}, {9}], 1) == {(7,): 1, (9,): 1}


def test_fpgrowth_vocabulary_and_warning():
    a, b, c = (1, 1), (2, 1), (3, 2)
    db = db_of([[a, b, b]], [[b], [c]], [[a], [b, c]])
    vocab = mine_fpgrowth(db, 2)
    assert dict(zip(vocab.patterns, vocab.frequencies)) == {
        (a,): 2, (b,): 3, (c,): 2, (a, b): 2, (b, c): 2}
    assert vocab.patterns[0] == (b,)
    with pytest.warns(SGEWarning):
        assert len(mine_fpgrowth(db, 4)) == 0


def test_fpgrowth_size_filters():
    db = db_of([[(1, 1), (2, 1), (3, 1)]], [[(1, 1), (2, 1), (3, 1)]])
    assert {len(p) for p in mine_fpgrowth(db, 1, max_size=2).patterns} == {1, 2}
    assert {len(p) for p in mine_fpgrowth(db, 1, min_size=2).patterns} == {2, 3}


transactions_strategy = st.lists(st.sets(st.integers(0, 11), max_size=12), min_size=1,
                                 max_size=200)


@settings(max_examples=200, deadline=None)
@given(transactions_strategy, st.integers(1, 5))
def test_fpgrowth_matches_brute_force(transactions, support):
    assert fpgrowth(transactions, support) == brute_force_itemsets(transactions, support)


@settings(max_examples=100, deadline=None)
@given(transactions_strategy, st.integers(1, 5), st.integers(1, 4))
def test_fpgrowth_max_size_is_a_truncation(transactions, support, max_size):
    full = brute_force_itemsets(transactions, support)
    expected = {s: c for s, c in full.items() if len(s) <= max_size}
    assert fpgrowth(transactions, support, max_size=max_size) == expected


@settings(max_examples=100, deadline=None)
@given(transactions_strategy, st.integers(1, 5))
def test_fpgrowth_anti_monotone(transactions, support):
    found = fpgrowth(transactions, support)
    for itemset, count in found.items():
        for i in range(len(itemset)):
            sub = itemset[:i] + itemset[i + 1:]
            if sub:
                assert sub in found and found[sub] >= count


def test_mining_is_deterministic(random_graph):
    corpus = sample_all(random_graph, SamplerConfig(s=3, nu=20, seed=3))
    v1 = mine_kgrams(build_transaction_db(corpus), 3, 100)
    v2 = mine_kgrams(build_transaction_db(corpus), 3, 100)
    assert v1.patterns == v2.patterns and v1.frequencies == v2.frequencies
    f1 = mine_fpgrowth(build_transaction_db(corpus), 25, max_size=2)
    f2 = mine_fpgrowth(build_transaction_db(corpus), 25, max_size=2)
    assert f1.patterns == f2.patterns


def test_vocabulary_export(tmp_path):
    db = build_transaction_db([NodeDocument(0, [[(1, 1), (2, 2)]])], names=("s", "x", "y"))
    vocab = mine_kgrams(db, 2, 3)
    vocab.write(tmp_path / "v.tsv")
    lines = (tmp_path / "v.tsv").read_text().splitlines()
    assert lines == ["0\t1\t(x,1)", "1\t1\t(x,1);(y,2)", "2\t1\t(y,2)"]

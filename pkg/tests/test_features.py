"""Feature layer: n-gram extraction, vocabulary fitting, sparse representations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offcat.errors import ValidationError
from offcat.features import (
    FeatureMatrix,
    NGramConfig,
    Representation,
    SparseVector,
    extract_ngrams,
    fit_vocabulary,
    load_vocabulary,
    save_vocabulary,
    sparse_from_pairs,
    tfidf_transform,
    vectorize,
    vectorize_one,
    vocabulary_fingerprint,
)

tokens_strategy = st.lists(
    st.sampled_from(["a", "b", "c", "d", "e", "f"]), min_size=0, max_size=12
)


class TestExtractNgrams:
    def test_unigram_bigram(self):
        assert extract_ngrams(["a", "b", "c"], NGramConfig(1, 2)) == ["a", "b", "c", "a b", "b c"]

    def test_short_doc(self):
        assert extract_ngrams(["a"], NGramConfig(1, 4)) == ["a"]

    def test_bi_tri(self):
        got = extract_ngrams(["x", "y", "z", "w"], NGramConfig(2, 3))
        assert got == ["x y", "y z", "z w", "x y z", "y z w"]

    @given(tokens_strategy)
    @settings(max_examples=100, deadline=None)
    def test_unigrams_equal_tokens(self, toks):
        assert extract_ngrams(toks, NGramConfig(1, 1)) == list(toks)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            NGramConfig(2, 1)
        with pytest.raises(ValidationError):
            NGramConfig(1, 5)
        with pytest.raises(ValidationError):
            NGramConfig(1, 1, min_df=0)


class TestVocabulary:
    def test_doc_freq_counts_documents(self):
        vocab = fit_vocabulary([["a", "b"], ["b", "c"]], NGramConfig(1, 1))
        assert set(vocab.term_index) == {"a", "b", "c"}
        df = {t: vocab.doc_freq[i] for t, i in vocab.term_index.items()}
        assert df == {"a": 1, "b": 2, "c": 1}
        assert vocab.n_docs == 2

    def test_repeated_token_once_per_doc(self):
        vocab = fit_vocabulary([["a", "a", "a"]], NGramConfig(1, 1))
        assert vocab.doc_freq == (1,)

    def test_min_df_can_empty_vocabulary(self):
        vocab = fit_vocabulary([["a"], ["b"]], NGramConfig(1, 1, min_df=2))
        assert vocab.dim == 0
        row = vectorize_one(["a"], vocab, Representation.COUNTS)
        assert row.dim == 0 and row.indices == ()

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValidationError):
            fit_vocabulary([], NGramConfig(1, 1))

    def test_lexicographic_indices(self):
        vocab = fit_vocabulary([["zebra", "apple", "mango"]], NGramConfig(1, 1))
        assert vocab.term_index == {"apple": 0, "mango": 1, "zebra": 2}

    def test_save_load_round_trip(self, tmp_path):
        vocab = fit_vocabulary([["a b c".split()[j] for j in range(3)], ["b", "c"]], NGramConfig(1, 2))
        path = tmp_path / "vocab.tsv"
        save_vocabulary(vocab, path)
        again = load_vocabulary(path)
        assert again == vocab
        assert vocabulary_fingerprint(again) == vocabulary_fingerprint(vocab)


class TestVectorize:
    def test_counts_by_hand(self):
        vocab = fit_vocabulary([["a"], ["b"], ["c"]], NGramConfig(1, 1))
        row = vectorize_one(["b", "b", "c"], vocab, Representation.COUNTS)
        assert dict(zip(row.indices, row.values)) == {1: 2.0, 2: 1.0}

    def test_out_of_vocab_ignored(self):
        vocab = fit_vocabulary([["a"]], NGramConfig(1, 1))
        row = vectorize_one(["zzz", "qqq"], vocab, Representation.COUNTS)
        assert row.indices == () and row.dim == 1

    def test_tfidf_hand_value(self):
        """Smoothed idf oracle: idf(t) = ln((1+N)/(1+df)) + 1, L2-normalized."""
        vocab = fit_vocabulary([["a", "b"], ["b", "c"]], NGramConfig(1, 1))
        row = vectorize_one(["a", "b"], vocab, Representation.TFIDF)
        idf_a = math.log(3 / 2) + 1
        idf_b = math.log(3 / 3) + 1
        norm = math.sqrt(idf_a**2 + idf_b**2)
        got = dict(zip(row.indices, row.values))
        assert got[0] == pytest.approx(idf_a / norm, abs=1e-12)
        assert got[1] == pytest.approx(idf_b / norm, abs=1e-12)
        assert round(got[0], 4) == 0.8148 and round(got[1], 4) == 0.5797

    def test_concat_blocks(self):
        vocab = fit_vocabulary([["a", "b"], ["b", "c"]], NGramConfig(1, 1))
        row = vectorize_one(["a", "b"], vocab, Representation.CONCAT)
        assert row.dim == 2 * vocab.dim
        counts = vectorize_one(["a", "b"], vocab, Representation.COUNTS)
        tfidf = vectorize_one(["a", "b"], vocab, Representation.TFIDF)
        got = dict(zip(row.indices, row.values))
        for i, v in zip(counts.indices, counts.values):
            assert got[i] == v
        for i, v in zip(tfidf.indices, tfidf.values):
            assert got[vocab.dim + i] == v

    @given(st.lists(tokens_strategy, min_size=1, max_size=6), tokens_strategy)
    @settings(max_examples=100, deadline=None)
    def test_tfidf_rows_unit_norm(self, docs, query):
        vocab = fit_vocabulary(docs, NGramConfig(1, 2))
        row = vectorize_one(query, vocab, Representation.TFIDF)
        norm = row.norm()
        assert norm == pytest.approx(1.0, abs=1e-9) or norm == 0.0

    @given(st.lists(tokens_strategy, min_size=1, max_size=6), tokens_strategy)
    @settings(max_examples=100, deadline=None)
    def test_counts_sum_equals_occurrences(self, docs, query):
        vocab = fit_vocabulary(docs, NGramConfig(1, 2))
        row = vectorize_one(query, vocab, Representation.COUNTS)
        in_vocab = sum(1 for g in extract_ngrams(query, vocab.config) if g in vocab.term_index)
        assert sum(row.values) == in_vocab

    def test_batch_order_independence(self):
        docs = [["a", "b"], ["c"], ["b", "c", "a"]]
        vocab = fit_vocabulary(docs, NGramConfig(1, 1))
        fwd = vectorize(docs, [0, 1, 0], vocab, Representation.TFIDF)
        rev = vectorize(docs[::-1], [0, 1, 0][::-1], vocab, Representation.TFIDF)
        assert fwd.rows == rev.rows[::-1]

    def test_tfidf_transform_matches_direct(self):
        docs = [["a", "b"], ["b", "c"], ["a", "c", "c"]]
        vocab = fit_vocabulary(docs, NGramConfig(1, 1))
        counts = vectorize(docs, [0, 1, 0], vocab, Representation.COUNTS)
        direct = vectorize(docs, [0, 1, 0], vocab, Representation.TFIDF)
        assert tfidf_transform(counts, vocab).rows == direct.rows


class TestSparseTypes:
    def test_sorted_invariant(self):
        with pytest.raises(ValidationError):
            SparseVector(dim=3, indices=(1, 0), values=(1.0, 1.0))
        with pytest.raises(ValidationError):
            SparseVector(dim=3, indices=(0, 3), values=(1.0, 1.0))
        with pytest.raises(ValidationError):
            SparseVector(dim=3, indices=(0,), values=(0.0,))
        with pytest.raises(ValidationError):
            SparseVector(dim=3, indices=(0,), values=(float("inf"),))

    def test_sparse_from_pairs_drops_zeros(self):
        v = sparse_from_pairs(5, [(3, 0.0), (1, 2.0), (4, -1.0)])
        assert v.indices == (1, 4) and v.values == (2.0, -1.0)

    def test_matrix_invariants(self):
        r1 = sparse_from_pairs(3, [(0, 1.0)])
        r2 = sparse_from_pairs(4, [(0, 1.0)])
        with pytest.raises(ValidationError):
            FeatureMatrix((r1, r2), (0, 1), Representation.COUNTS)
        with pytest.raises(ValidationError):
            FeatureMatrix((r1,), (0, 1), Representation.COUNTS)

    def test_to_csr(self):
        m = FeatureMatrix(
            (sparse_from_pairs(3, [(0, 1.0), (2, 2.0)]), sparse_from_pairs(3, [(1, 5.0)])),
            (0, 1),
            Representation.COUNTS,
        )
        dense = m.to_csr().toarray()
        assert np.array_equal(dense, [[1.0, 0.0, 2.0], [0.0, 5.0, 0.0]])

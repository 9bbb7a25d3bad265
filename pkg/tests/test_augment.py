"""Embedding training, similarity queries, and paraphrase generation."""

import numpy as np
import pytest

from offcat.augment import (
    AugmentConfig,
    EmbeddingModel,
    NeighborCache,
    generate_balanced,
    load_embeddings,
    most_similar,
    paraphrase,
    save_embeddings,
    sgns_loss_and_grad,
    train_embeddings,
)
from offcat.corpus import Task
from offcat.errors import ValidationError

from conftest import random_token_dataset, token_dataset

FAST = AugmentConfig(dim=16, window=2, epochs=2, negative=3, seed=1)


def stub_model(word_vectors: dict[str, list[float]]) -> EmbeddingModel:
    vocab = {w: i for i, w in enumerate(word_vectors)}
    vectors = np.array([word_vectors[w] for w in vocab], dtype=np.float64)
    return EmbeddingModel(vocab=vocab, vectors=vectors, trained_on="stub")


class TestTrainEmbeddings:
    def test_vocabulary_is_distinct_words(self):
        docs = [["to", "be", "or", "not", "to", "be"]] * 10
        model = train_embeddings(docs, FAST)
        assert set(model.vocab) == {"to", "be", "or", "not"}

    def test_min_count_filters(self):
        docs = [["common", "common", "rare"]] * 1 + [["common"]] * 5
        model = train_embeddings(docs, AugmentConfig(dim=8, min_count=2, seed=0))
        assert set(model.vocab) == {"common"}

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValidationError):
            train_embeddings([], FAST)
        with pytest.raises(ValidationError):
            train_embeddings([["once"]], AugmentConfig(dim=8, min_count=5))

    def test_cooccurrence_drives_similarity(self):
        """Constructed corpus: cat appears with dog in 90% of its windows
        and with car in 10%; car otherwise lives in a distinct context."""
        rng = np.random.default_rng(42)
        docs = []
        for _ in range(300):
            docs.append(["the", "cat", "dog", "runs"] if rng.random() < 0.9 else ["the", "cat", "car", "runs"])
            docs.append(["drive", "car", "road", "fast"])
        model = train_embeddings(docs, AugmentConfig(dim=24, window=2, epochs=3, negative=3, seed=1))

        def cos(a, b):
            va, vb = model.vectors[model.vocab[a]], model.vectors[model.vocab[b]]
            return float(va @ vb / np.sqrt((va @ va) * (vb @ vb)))

        assert cos("cat", "dog") > cos("cat", "car")

    def test_deterministic_per_seed(self):
        docs = [["a", "b", "c"], ["b", "c", "d"]] * 5
        m1 = train_embeddings(docs, FAST)
        m2 = train_embeddings(docs, FAST)
        assert np.array_equal(m1.vectors, m2.vectors)
        m3 = train_embeddings(docs, AugmentConfig(dim=16, window=2, epochs=2, negative=3, seed=2))
        assert not np.array_equal(m1.vectors, m3.vectors)

    def test_vectors_finite(self):
        docs = [["x", "y"]] * 20
        model = train_embeddings(docs, FAST)
        assert np.isfinite(model.vectors).all()


class TestGradients:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(7)
        center = rng.normal(size=12)
        outputs = rng.normal(size=(6, 12))
        labels = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
        _, g_center, g_out = sgns_loss_and_grad(center, outputs, labels)
        eps = 1e-6

        num_center = np.zeros_like(center)
        for i in range(len(center)):
            hi, lo = center.copy(), center.copy()
            hi[i] += eps
            lo[i] -= eps
            num_center[i] = (
                sgns_loss_and_grad(hi, outputs, labels)[0]
                - sgns_loss_and_grad(lo, outputs, labels)[0]
            ) / (2 * eps)
        rel = np.abs(num_center - g_center).max() / np.abs(g_center).max()
        assert rel < 1e-4

        num_out = np.zeros_like(outputs)
        for i in range(outputs.shape[0]):
            for j in range(outputs.shape[1]):
                hi, lo = outputs.copy(), outputs.copy()
                hi[i, j] += eps
                lo[i, j] -= eps
                num_out[i, j] = (
                    sgns_loss_and_grad(center, hi, labels)[0]
                    - sgns_loss_and_grad(center, lo, labels)[0]
                ) / (2 * eps)
        rel = np.abs(num_out - g_out).max() / np.abs(g_out).max()
        assert rel < 1e-4


class TestMostSimilar:
    def test_k_zero_and_unknown(self):
        model = stub_model({"a": [1.0, 0.0], "b": [0.0, 1.0]})
        assert most_similar(model, "a", 0) == []
        assert most_similar(model, "zzz", 5) == []

    def test_hand_set_vectors_force_order(self):
        model = stub_model({"w1": [1.0, 0.0], "w2": [1.0, 0.0], "w3": [0.0, 1.0]})
        got = most_similar(model, "w1", 2)
        assert [w for w, _ in got] == ["w2", "w3"]
        assert got[0][1] == pytest.approx(1.0)
        assert got[1][1] == pytest.approx(0.0)

    def test_descending_and_excludes_query(self):
        model = stub_model({"q": [1.0, 0.0], "x": [0.9, 0.1], "y": [0.5, 0.5], "z": [-1.0, 0.0]})
        got = most_similar(model, "q", 10)
        assert "q" not in [w for w, _ in got]
        sims = [s for _, s in got]
        assert sims == sorted(sims, reverse=True)


class TestParaphrase:
    def test_zero_probability_identity(self):
        model = stub_model({"a": [1.0, 0.0], "b": [0.9, 0.1]})
        rng = np.random.default_rng(0)
        assert paraphrase(["a", "b", "a"], model, AugmentConfig(replace_prob=0.0), rng) == ["a", "b", "a"]

    def test_probability_one_replaces_everything(self):
        model = stub_model({"a": [1.0, 0.0], "b": [0.9, 0.1], "c": [0.8, 0.2]})
        rng = np.random.default_rng(3)
        out = paraphrase(["a", "b", "c", "a"], model, AugmentConfig(replace_prob=1.0, top_k=2), rng)
        assert len(out) == 4
        for before, after in zip(["a", "b", "c", "a"], out):
            assert after != before  # top-k excludes the query word itself

    def test_unknown_tokens_kept_verbatim(self):
        model = stub_model({"a": [1.0, 0.0], "b": [0.9, 0.1]})
        rng = np.random.default_rng(1)
        out = paraphrase(["mystery", "a"], model, AugmentConfig(replace_prob=1.0, top_k=1), rng)
        assert out[0] == "mystery"

    def test_exact_rng_consumption(self):
        """Replay the documented draw order (coin, then neighbor if replacing
        and the list is non-empty) with an identical generator."""
        model = stub_model(
            {"a": [1.0, 0.0], "b": [0.9, 0.1], "c": [0.8, 0.2], "d": [0.0, 1.0]}
        )
        config = AugmentConfig(replace_prob=0.6, top_k=3, seed=0)
        tokens = ["a", "unknown", "b", "c", "d", "a", "b"]
        out = paraphrase(tokens, model, config, np.random.default_rng(99))

        neighbor_lists = {
            w: [x for x, _ in most_similar(model, w, 3)] for w in ("a", "b", "c", "d")
        }
        rng = np.random.default_rng(99)
        expected = []
        for tok in tokens:
            if rng.random() < 0.6:
                neighbors = neighbor_lists.get(tok, [])
                if neighbors:
                    expected.append(neighbors[int(rng.integers(0, len(neighbors)))])
                    continue
            expected.append(tok)
        assert out == expected

    def test_output_words_from_model_or_retained(self):
        model = stub_model({"a": [1.0, 0.0], "b": [0.9, 0.1], "c": [0.0, 1.0]})
        rng = np.random.default_rng(5)
        tokens = ["a", "qqq", "b", "c"] * 10
        out = paraphrase(tokens, model, AugmentConfig(replace_prob=0.7, top_k=2), rng)
        assert len(out) == len(tokens)
        for before, after in zip(tokens, out):
            assert after in model.vocab or after == before

    def test_replacement_rate_statistics(self):
        """Empirical replacement fraction within 3 binomial sigma of 0.9."""
        model = stub_model({"a": [1.0, 0.0], "b": [1.0, 0.0]})  # a <-> b always
        n = 10_000
        config = AugmentConfig(replace_prob=0.9, top_k=1)
        out = paraphrase(["a"] * n, model, config, np.random.default_rng(123))
        replaced = sum(1 for w in out if w == "b")
        sigma = (0.9 * 0.1 / n) ** 0.5
        assert abs(replaced / n - 0.9) < 3 * sigma


class TestGenerateBalanced:
    def _model(self):
        return stub_model({"a": [1.0, 0.0], "b": [0.9, 0.1], "c": [0.0, 1.0]})

    def test_counts_balanced_with_synthetic_flags(self):
        ds = token_dataset(
            Task.B,
            {
                "TARGETED": [["a", "b"], ["b", "c"], ["a", "c"], ["a"], ["b"]],
                "UNTARGETED": [["c", "a"], ["b", "a"]],
            },
        )
        out = generate_balanced(ds, self._model(), AugmentConfig(seed=4, top_k=2))
        assert out.class_counts == {"TARGETED": 5, "UNTARGETED": 5}
        synth = [(t, l) for t, l in out.examples if t.provenance == "synthetic"]
        assert len(synth) == 3
        assert all(l.value == "UNTARGETED" for _, l in synth)

    def test_originals_untouched(self):
        ds = token_dataset(
            Task.B, {"TARGETED": [["a"], ["b"], ["c"]], "UNTARGETED": [["a", "c"], ["b"]]}
        )
        out = generate_balanced(ds, self._model(), AugmentConfig(seed=0))
        assert out.examples[: len(ds.examples)] == ds.examples

    def test_already_balanced_no_synthesis(self):
        ds = token_dataset(Task.B, {"TARGETED": [["a"], ["b"]], "UNTARGETED": [["c"], ["a"]]})
        out = generate_balanced(ds, self._model(), AugmentConfig(seed=0))
        assert out == ds

    def test_empty_minority_rejected(self):
        ds = token_dataset(Task.C, {"INDIVIDUAL": [["a"], ["b"]], "GROUP": [["c"], ["a"]]})
        with pytest.raises(ValidationError, match="OTHER"):
            generate_balanced(ds, self._model(), AugmentConfig(seed=0))

    def test_only_restricts_classes(self):
        ds = token_dataset(
            Task.C,
            {
                "INDIVIDUAL": [["a"]] * 6,
                "GROUP": [["b"]] * 3,
                "OTHER": [["c"]] * 2,
            },
        )
        out = generate_balanced(ds, self._model(), AugmentConfig(seed=0), only={"GROUP"})
        assert out.class_counts == {"INDIVIDUAL": 6, "GROUP": 6, "OTHER": 2}

    def test_table_counts_arithmetic(self):
        ds = random_token_dataset(
            Task.B, {"TARGETED": 310, "UNTARGETED": 42}, seed=0, vocab_size=40, doc_len=5
        )
        model = train_embeddings(ds.documents, FAST)
        out = generate_balanced(ds, model, AugmentConfig(seed=1, top_k=3))
        assert out.class_counts == {"TARGETED": 310, "UNTARGETED": 310}
        synth = sum(1 for t, _ in out.examples if t.provenance == "synthetic")
        assert synth == 310 - 42


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        docs = [["alpha", "beta", "gamma"], ["beta", "delta"]] * 6
        model = train_embeddings(docs, FAST)
        path = tmp_path / "vectors.txt"
        save_embeddings(model, path)
        again = load_embeddings(path)
        assert again.vocab == model.vocab
        assert np.array_equal(again.vectors, model.vectors)
        first = path.read_text().splitlines()[0]
        assert first == f"{len(model.vocab)} {model.dim}"

    def test_neighbor_cache_memoizes(self):
        model = stub_model({"a": [1.0, 0.0], "b": [0.9, 0.1]})
        cache = NeighborCache(model, 1)
        assert cache.lookup("a") is cache.lookup("a")

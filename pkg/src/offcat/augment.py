"""Embedding-based synthetic data generation for minority classes.

A skip-gram model with negative sampling is trained on the training
corpus; minority tweets are then paraphrased by replacing each token,
with a fixed probability, by one of its top-k most-similar words.  The
replacement probability and k default to 0.9 and 5.

Training is plain SGD, single-threaded on purpose: identical seeds give
bit-identical vectors.  `sgns_loss_and_grad` is the one place the
objective and its gradients are written down; the trainer consumes it
and so do the finite-difference checks in the test suite.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Dataset, Label, Tweet, with_examples
from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class AugmentConfig:
    replace_prob: float = 0.9
    top_k: int = 5
    dim: int = 100
    window: int = 5
    epochs: int = 5
    negative: int = 5
    min_count: int = 1
    learning_rate: float = 0.025
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.replace_prob <= 1.0:
            raise ValidationError(f"replace_prob must be in [0,1], got {self.replace_prob}")
        if self.top_k < 0:
            raise ValidationError(f"top_k must be >= 0, got {self.top_k}")
        if min(self.dim, self.window, self.epochs, self.negative, self.min_count) < 1:
            raise ValidationError("dim, window, epochs, negative, min_count must be >= 1")


@dataclass(frozen=True)
class EmbeddingModel:
    vocab: dict[str, int]  # word -> row into vectors
    vectors: np.ndarray  # V x d input vectors
    trained_on: str  # corpus fingerprint

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __post_init__(self) -> None:
        if not np.isfinite(self.vectors).all():
            raise ValidationError("embedding matrix contains NaN/Inf")


def corpus_fingerprint(corpus: Sequence[Sequence[str]]) -> str:
    h = hashlib.sha256()
    for doc in corpus:
        h.update((" ".join(doc) + "\n").encode("utf-8"))
    return h.hexdigest()[:16]


def sgns_loss_and_grad(
    center: np.ndarray, outputs: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative-sampling objective for one center word against a stack of
    output vectors (the true context gets label 1, negatives get 0).

    Returns (loss, d_loss/d_center, d_loss/d_outputs) where
    loss = -sum_j [ y_j * ln s(u_j . v) + (1 - y_j) * ln s(-u_j . v) ]
    with s the logistic sigmoid.
    """
    scores = outputs @ center
    probs = 1.0 / (1.0 + np.exp(-scores))
    eps = 1e-12
    loss = -float(
        np.sum(labels * np.log(probs + eps) + (1.0 - labels) * np.log(1.0 - probs + eps))
    )
    delta = probs - labels  # d loss / d score
    grad_center = outputs.T @ delta
    grad_outputs = np.outer(delta, center)
    return loss, grad_center, grad_outputs


def _negative_table(counts: np.ndarray) -> np.ndarray:
    """Cumulative distribution over word ids, frequencies raised to 3/4."""
    weights = counts.astype(np.float64) ** 0.75
    return np.cumsum(weights / weights.sum())


def train_embeddings(corpus: Sequence[Sequence[str]], config: AugmentConfig) -> EmbeddingModel:
    """Skip-gram with negative sampling over the tokenized corpus.

    Classic recipe: dynamic window width drawn uniformly from [1, window]
    per center word, unigram^(3/4) negative sampling, linearly decaying
    learning rate.  Words below min_count are dropped from training.
    """
    if len(corpus) == 0:
        raise ValidationError("cannot train embeddings on an empty corpus")
    freq: dict[str, int] = {}
    for doc in corpus:
        for tok in doc:
            freq[tok] = freq.get(tok, 0) + 1
    # frequency-descending, ties alphabetical: stable ids independent of corpus order
    words = sorted((w for w, c in freq.items() if c >= config.min_count), key=lambda w: (-freq[w], w))
    if not words:
        raise ValidationError(f"no word reaches min_count={config.min_count}")
    vocab = {w: i for i, w in enumerate(words)}
    counts = np.array([freq[w] for w in words], dtype=np.float64)
    cum_table = _negative_table(counts)

    rng = np.random.default_rng(config.seed)
    d = config.dim
    w_in = (rng.random((len(words), d)) - 0.5) / d
    w_out = np.zeros((len(words), d))

    sentences = [[vocab[t] for t in doc if t in vocab] for doc in corpus]
    total_words = sum(len(s) for s in sentences) * config.epochs
    lr0 = config.learning_rate
    min_lr = lr0 * 1e-4
    seen = 0
    for _ in range(config.epochs):
        for sent in sentences:
            for pos, center_id in enumerate(sent):
                lr = max(min_lr, lr0 * (1.0 - seen / max(1, total_words)))
                seen += 1
                span = int(rng.integers(1, config.window + 1))
                lo = max(0, pos - span)
                hi = min(len(sent), pos + span + 1)
                for ctx_pos in range(lo, hi):
                    if ctx_pos == pos:
                        continue
                    ctx_id = sent[ctx_pos]
                    negs = np.searchsorted(cum_table, rng.random(config.negative))
                    negs = np.minimum(negs, len(cum_table) - 1)
                    out_ids = np.concatenate(([ctx_id], negs))
                    labels = np.zeros(len(out_ids))
                    labels[0] = 1.0
                    _, g_center, g_out = sgns_loss_and_grad(
                        w_in[center_id], w_out[out_ids], labels
                    )
                    # duplicate negative draws must accumulate, hence add.at
                    np.add.at(w_out, out_ids, -lr * g_out)
                    w_in[center_id] -= lr * g_center
    return EmbeddingModel(vocab=vocab, vectors=w_in, trained_on=corpus_fingerprint(corpus))


def most_similar(model: EmbeddingModel, word: str, k: int) -> list[tuple[str, float]]:
    """Top-k cosine neighbors of `word`, descending; [] for unknown words."""
    idx = model.vocab.get(word)
    if idx is None or k <= 0:
        return []
    vecs = model.vectors
    norms = np.sqrt((vecs * vecs).sum(axis=1))
    norms[norms == 0.0] = 1.0  # zero vectors get cosine 0 against everything
    sims = (vecs @ vecs[idx]) / (norms * norms[idx])
    order = np.lexsort((np.arange(len(sims)), -sims))
    order = order[order != idx][:k]
    words = list(model.vocab)
    return [(words[i], float(sims[i])) for i in order]


class NeighborCache:
    """Per-run memo of most_similar lists, keyed by token."""

    def __init__(self, model: EmbeddingModel, top_k: int):
        self.model = model
        self.top_k = top_k
        self._memo: dict[str, list[str]] = {}

    def lookup(self, token: str) -> list[str]:
        if token not in self._memo:
            self._memo[token] = [w for w, _ in most_similar(self.model, token, self.top_k)]
        return self._memo[token]


def paraphrase(
    tokens: Sequence[str],
    model: EmbeddingModel,
    config: AugmentConfig,
    rng: np.random.Generator,
    cache: NeighborCache | None = None,
) -> list[str]:
    """Replace each token independently with probability replace_prob by a
    uniform draw from its top-k most-similar words.

    RNG consumption order, fixed for reproducibility: per token, one coin
    flip; then exactly one neighbor draw if (and only if) the coin said
    replace and the token's similarity list is non-empty.  Tokens with an
    empty list are kept verbatim.  Output length equals input length.
    """
    cache = cache or NeighborCache(model, config.top_k)
    out: list[str] = []
    for tok in tokens:
        if rng.random() < config.replace_prob:
            neighbors = cache.lookup(tok)
            if neighbors:
                out.append(neighbors[int(rng.integers(0, len(neighbors)))])
                continue
        out.append(tok)
    return out


def generate_balanced(
    dataset: Dataset,
    model: EmbeddingModel,
    config: AugmentConfig,
    only: set[str] | None = None,
) -> Dataset:
    """Raise every minority class to the majority count with paraphrases of
    uniformly drawn real minority tweets.

    Original examples are never touched; synthetic tweets carry provenance
    "synthetic" and an id derived from their source tweet.  `only`
    restricts generation to the named classes (for per-class enhancement
    recipes that mix paraphrasing with random duplication).
    """
    counts = dataset.class_counts
    majority = max(counts.values()) if counts else 0
    minorities = [v for v, n in counts.items() if n < majority]  # label order
    if only is not None:
        minorities = [v for v in minorities if v in only]
    for value in minorities:
        if counts[value] == 0:
            raise ValidationError(f"minority class {value} is empty, cannot paraphrase")
    rng = np.random.default_rng(config.seed)
    cache = NeighborCache(model, config.top_k)
    by_class: dict[str, list[int]] = {v: [] for v in counts}
    for i, (_, label) in enumerate(dataset.examples):
        by_class[label.value].append(i)
    extra: list[tuple[Tweet, Label]] = []
    for value in minorities:
        members = by_class[value]
        need = majority - len(members)
        for j in range(need):
            src_tweet, src_label = dataset.examples[members[int(rng.integers(0, len(members)))]]
            new_tokens = paraphrase(src_tweet.tokens, model, config, rng, cache)
            synth = Tweet(
                id=f"{src_tweet.id}#syn{j}",
                raw_text=" ".join(new_tokens),
                tokens=tuple(new_tokens),
                provenance="synthetic",
            )
            extra.append((synth, src_label))
    return with_examples(dataset, tuple(dataset.examples) + tuple(extra))


def save_embeddings(model: EmbeddingModel, path: str | Path) -> None:
    """Plain-text vector format: first line "V d", then "word v1 ... vd"."""
    path = Path(path)
    words = sorted(model.vocab, key=model.vocab.get)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"{len(words)} {model.dim}\n")
        for w in words:
            vec = " ".join(repr(float(x)) for x in model.vectors[model.vocab[w]])
            fh.write(f"{w} {vec}\n")


def load_embeddings(path: str | Path) -> EmbeddingModel:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError(f"{path}: expected 'V d' header")
        v, d = int(header[0]), int(header[1])
        vocab: dict[str, int] = {}
        vectors = np.zeros((v, d))
        for i in range(v):
            parts = fh.readline().rstrip("\n").split(" ")
            if len(parts) != d + 1:
                raise ParseError(f"{path}: line {i + 2}: expected word plus {d} values")
            vocab[parts[0]] = i
            vectors[i] = [float(x) for x in parts[1:]]
    return EmbeddingModel(vocab=vocab, vectors=vectors, trained_on="loaded")

"""N-gram vocabularies and sparse bag-of-words / TF-IDF representations.

Vocabulary indices are assigned by lexicographic term order, so every fit
over the same corpus yields the same column layout.  TF-IDF uses the
smoothed formula idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1 with raw term
frequency, followed by L2 row normalization.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from math import sqrt
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse as sp

from .errors import ParseError, ValidationError


class Representation(Enum):
    COUNTS = "counts"
    TFIDF = "tfidf"
    CONCAT = "concat"  # counts block followed by tfidf block


@dataclass(frozen=True)
class NGramConfig:
    min_n: int = 1
    max_n: int = 1
    min_df: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.min_n <= self.max_n:
            raise ValidationError(f"need 1 <= min_n <= max_n, got ({self.min_n}, {self.max_n})")
        if self.max_n > 4:
            raise ValidationError(f"max_n capped at 4, got {self.max_n}")
        if self.min_df < 1:
            raise ValidationError(f"min_df must be >= 1, got {self.min_df}")


def extract_ngrams(tokens: Sequence[str], config: NGramConfig) -> list[str]:
    """All contiguous n-grams for n in [min_n, max_n], space-joined.

    Output order: all n-grams of the smallest n left to right, then the
    next n, and so on.
    """
    out: list[str] = []
    for n in range(config.min_n, config.max_n + 1):
        for i in range(len(tokens) - n + 1):
            out.append(" ".join(tokens[i : i + n]))
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Fitted n-gram vocabulary with document frequencies.

    `doc_freq[i]` is the document frequency of the term at column i;
    columns run over terms in lexicographic order.
    """

    term_index: dict[str, int]
    doc_freq: tuple[int, ...]
    n_docs: int
    config: NGramConfig

    @property
    def dim(self) -> int:
        return len(self.term_index)

    def idf(self) -> np.ndarray:
        df = np.asarray(self.doc_freq, dtype=np.float64)
        return np.log((1.0 + self.n_docs) / (1.0 + df)) + 1.0


def fit_vocabulary(docs: Sequence[Sequence[str]], config: NGramConfig) -> Vocabulary:
    """Build the vocabulary of all n-grams with document frequency >= min_df."""
    if len(docs) == 0:
        raise ValidationError("cannot fit a vocabulary on an empty corpus")
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(extract_ngrams(doc, config)))
    terms = sorted(t for t, c in df.items() if c >= config.min_df)
    return Vocabulary(
        term_index={t: i for i, t in enumerate(terms)},
        doc_freq=tuple(df[t] for t in terms),
        n_docs=len(docs),
        config=config,
    )


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse vector; no explicit zeros are stored."""

    dim: int
    indices: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValidationError("indices/values length mismatch")
        prev = -1
        for i, v in zip(self.indices, self.values):
            if not prev < i < self.dim:
                raise ValidationError(f"index {i} out of order or >= dim {self.dim}")
            if v == 0.0 or not np.isfinite(v):
                raise ValidationError(f"entry at {i} is zero or non-finite")
            prev = i

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[list(self.indices)] = self.values
        return out

    def norm(self) -> float:
        return sqrt(sum(v * v for v in self.values))


def sparse_from_pairs(dim: int, pairs: Iterable[tuple[int, float]]) -> SparseVector:
    """SparseVector from unsorted (index, value) pairs; zeros dropped."""
    kept = sorted((i, v) for i, v in pairs if v != 0.0)
    return SparseVector(
        dim=dim,
        indices=tuple(i for i, _ in kept),
        values=tuple(float(v) for _, v in kept),
    )


@dataclass(frozen=True)
class FeatureMatrix:
    rows: tuple[SparseVector, ...]
    labels: tuple[int, ...]
    representation: Representation

    def __post_init__(self) -> None:
        if len(self.rows) != len(self.labels):
            raise ValidationError("rows/labels length mismatch")
        dims = {r.dim for r in self.rows}
        if len(dims) > 1:
            raise ValidationError(f"rows with mixed dims: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.rows[0].dim if self.rows else 0

    def class_counts(self) -> dict[int, int]:
        return dict(Counter(self.labels))

    def to_csr(self) -> sp.csr_matrix:
        return rows_to_csr(self.rows, self.dim)

    def __len__(self) -> int:
        return len(self.rows)


def rows_to_csr(rows: Sequence[SparseVector], dim: int) -> sp.csr_matrix:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, r in enumerate(rows):
        indptr[i + 1] = indptr[i] + len(r.indices)
    indices = np.fromiter(
        (i for r in rows for i in r.indices), dtype=np.int64, count=indptr[-1]
    )
    data = np.fromiter(
        (v for r in rows for v in r.values), dtype=np.float64, count=indptr[-1]
    )
    return sp.csr_matrix((data, indices, indptr), shape=(len(rows), dim))


def _count_row(doc: Sequence[str], vocab: Vocabulary) -> SparseVector:
    counts: Counter[int] = Counter()
    for gram in extract_ngrams(doc, vocab.config):
        idx = vocab.term_index.get(gram)
        if idx is not None:
            counts[idx] += 1
    return sparse_from_pairs(vocab.dim, ((i, float(c)) for i, c in counts.items()))


def _tfidf_row(counted: SparseVector, idf: np.ndarray) -> SparseVector:
    weighted = [(i, v * idf[i]) for i, v in zip(counted.indices, counted.values)]
    norm = sqrt(sum(w * w for _, w in weighted))
    if norm > 0.0:
        weighted = [(i, w / norm) for i, w in weighted]
    return sparse_from_pairs(counted.dim, weighted)


def vectorize_one(
    doc: Sequence[str],
    vocab: Vocabulary,
    representation: Representation,
    idf: np.ndarray | None = None,
) -> SparseVector:
    """Single-document representation; out-of-vocabulary n-grams are ignored.

    Callers vectorizing many documents should pass a precomputed `vocab.idf()`.
    """
    counted = _count_row(doc, vocab)
    if representation is Representation.COUNTS:
        return counted
    if idf is None:
        idf = vocab.idf()
    tfidf = _tfidf_row(counted, idf)
    if representation is Representation.TFIDF:
        return tfidf
    # concat: counts in columns [0, V), tfidf in [V, 2V)
    pairs = [(i, v) for i, v in zip(counted.indices, counted.values)]
    pairs += [(vocab.dim + i, v) for i, v in zip(tfidf.indices, tfidf.values)]
    return sparse_from_pairs(2 * vocab.dim, pairs)


def vectorize(
    docs: Sequence[Sequence[str]],
    labels: Sequence[int],
    vocab: Vocabulary,
    representation: Representation,
) -> FeatureMatrix:
    if len(docs) != len(labels):
        raise ValidationError("docs/labels length mismatch")
    idf = vocab.idf()
    rows = tuple(vectorize_one(doc, vocab, representation, idf) for doc in docs)
    return FeatureMatrix(rows=rows, labels=tuple(int(y) for y in labels), representation=representation)


def tfidf_transform(matrix: FeatureMatrix, vocab: Vocabulary) -> FeatureMatrix:
    """Reweight a COUNTS matrix to TFIDF (used when resampling runs on counts)."""
    if matrix.representation is not Representation.COUNTS:
        raise ValidationError("tfidf_transform expects a COUNTS matrix")
    idf = vocab.idf()
    rows = tuple(_tfidf_row(r, idf) for r in matrix.rows)
    return FeatureMatrix(rows=rows, labels=matrix.labels, representation=Representation.TFIDF)


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write `term<TAB>index<TAB>doc_freq` lines under a one-line header."""
    path = Path(path)
    terms = sorted(vocab.term_index, key=vocab.term_index.get)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(
            f"#n_docs={vocab.n_docs}\tmin_n={vocab.config.min_n}"
            f"\tmax_n={vocab.config.max_n}\tmin_df={vocab.config.min_df}\n"
        )
        for term in terms:
            idx = vocab.term_index[term]
            fh.write(f"{term}\t{idx}\t{vocab.doc_freq[idx]}\n")


def load_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("#"):
            raise ParseError(f"{path}: missing vocabulary header")
        meta = dict(part.split("=", 1) for part in header.lstrip("#").split("\t"))
        config = NGramConfig(
            min_n=int(meta["min_n"]), max_n=int(meta["max_n"]), min_df=int(meta["min_df"])
        )
        term_index: dict[str, int] = {}
        freqs: dict[int, int] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                term, idx_s, df_s = line.split("\t")
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: expected 3 columns") from exc
            term_index[term] = int(idx_s)
            freqs[int(idx_s)] = int(df_s)
    doc_freq = tuple(freqs[i] for i in range(len(freqs)))
    return Vocabulary(
        term_index=term_index, doc_freq=doc_freq, n_docs=int(meta["n_docs"]), config=config
    )


def vocabulary_fingerprint(vocab: Vocabulary) -> str:
    """Stable hash identifying a fitted vocabulary (terms, indices, dfs, config)."""
    h = hashlib.sha256()
    h.update(
        f"{vocab.n_docs}|{vocab.config.min_n}|{vocab.config.max_n}|{vocab.config.min_df}".encode()
    )
    for term in sorted(vocab.term_index, key=vocab.term_index.get):
        h.update(f"{term}\t{vocab.term_index[term]}\t{vocab.doc_freq[vocab.term_index[term]]}\n".encode())
    return h.hexdigest()[:16]

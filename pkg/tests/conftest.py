"""Shared fixtures and small builders for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from offcat.corpus import Dataset, Label, Task, Tweet
from offcat.features import FeatureMatrix, Representation, sparse_from_pairs

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

OLID_HEADER = "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c"


def write_olid(path: Path, rows: list[tuple[str, str, str, str, str]]) -> Path:
    """rows: (id, tweet, a, b, c) with literal 'NULL' for absent labels."""
    lines = [OLID_HEADER] + ["\t".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def dense_matrix(points, labels, representation=Representation.COUNTS) -> FeatureMatrix:
    """FeatureMatrix from a list of dense coordinate tuples."""
    dim = len(points[0])
    rows = tuple(sparse_from_pairs(dim, list(enumerate(p))) for p in points)
    return FeatureMatrix(rows, tuple(labels), representation)


def token_dataset(task: Task, groups: dict[str, list[list[str]]]) -> Dataset:
    """Dataset from {label value: [token lists]}."""
    examples = []
    i = 0
    for value, docs in groups.items():
        for toks in docs:
            tweet = Tweet(id=f"t{i}", raw_text=" ".join(toks), tokens=tuple(toks))
            examples.append((tweet, Label(task, value)))
            i += 1
    return Dataset(task=task, examples=tuple(examples))


def random_token_dataset(task: Task, counts: dict[str, int], seed: int, vocab_size: int = 120,
                         doc_len: int = 8) -> Dataset:
    rng = np.random.default_rng(seed)
    words = [f"w{i}" for i in range(vocab_size)]
    groups = {
        value: [
            [words[j] for j in rng.integers(0, vocab_size, size=doc_len)] for _ in range(n)
        ]
        for value, n in counts.items()
    }
    return token_dataset(task, groups)


@pytest.fixture
def mini_b_path() -> Path:
    return DATA_DIR / "mini_b.tsv"


@pytest.fixture
def mini_c_path() -> Path:
    return DATA_DIR / "mini_c.tsv"


@pytest.fixture
def synthetic_b_path() -> Path:
    return DATA_DIR / "synthetic_b.tsv"

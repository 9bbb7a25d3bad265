"""OLID-format ingestion, tweet preprocessing, and stratified splitting.

The corpus layer turns raw TSV rows into immutable `Tweet`/`Dataset`
structures.  Everything downstream (features, resampling, augmentation)
consumes token lists produced here, so the cleaning rules are fixed and
order-dependent: lowercase, strip URLs, strip @-mentions, drop every
remaining character that is not a letter/digit/whitespace (this removes
punctuation and emoji), then split on whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DataError, ParseError, ValidationError


class Task(Enum):
    """Categorization sub-task: B (targeted vs untargeted) or C (target type)."""

    B = "B"
    C = "C"


# Label values in class-index order; index into these tuples is the class index
# used everywhere downstream (feature matrices, classifiers, reports).
TASK_LABELS: dict[Task, tuple[str, ...]] = {
    Task.B: ("TARGETED", "UNTARGETED"),
    Task.C: ("INDIVIDUAL", "GROUP", "OTHER"),
}

# Column codes used by the OLID TSV release.
TSV_CODES: dict[Task, dict[str, str]] = {
    Task.B: {"TIN": "TARGETED", "UNT": "UNTARGETED"},
    Task.C: {"IND": "INDIVIDUAL", "GRP": "GROUP", "OTH": "OTHER"},
}
LABEL_TO_CODE: dict[Task, dict[str, str]] = {
    task: {v: k for k, v in codes.items()} for task, codes in TSV_CODES.items()
}

OLID_HEADER = ("id", "tweet", "subtask_a", "subtask_b", "subtask_c")
_TASK_COLUMN = {Task.B: 3, Task.C: 4}

_URL_RE = re.compile(r"(?:https?://\S+|www\.\S+|(?<!\S)t\.co/\S+)")
_MENTION_RE = re.compile(r"(?<!\S)@\S+")
_NON_ALNUM_RE = re.compile(r"[\W_]+", re.UNICODE)


def preprocess(raw_text: str) -> list[str]:
    """Clean a tweet into lowercase word tokens.

    Steps, in order: lowercase; remove URLs (scheme-prefixed, ``www.`` and
    bare ``t.co/`` forms); remove whitespace-delimited tokens starting with
    ``@``; replace every character outside letters/digits/whitespace
    (punctuation, symbols, emoji) with a space; split on whitespace.
    Degenerate input yields an empty list.
    """
    text = raw_text.lower()
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    text = _NON_ALNUM_RE.sub(" ", text)
    return text.split()


@dataclass(frozen=True)
class Tweet:
    """One preprocessed tweet.

    `provenance` distinguishes rows created by data enhancement:
    "original" (from file), "duplicate" (random oversampling) or
    "synthetic" (embedding-based paraphrase).
    """

    id: str
    raw_text: str
    tokens: tuple[str, ...]
    provenance: str = "original"

    def __post_init__(self) -> None:
        if any(t == "" for t in self.tokens):
            raise ValidationError(f"tweet {self.id!r}: empty token")


@dataclass(frozen=True)
class Label:
    task: Task
    value: str

    def __post_init__(self) -> None:
        if self.value not in TASK_LABELS[self.task]:
            raise ValidationError(
                f"label {self.value!r} not valid for task {self.task.value}"
            )

    @property
    def index(self) -> int:
        return TASK_LABELS[self.task].index(self.value)


@dataclass(frozen=True)
class Dataset:
    """Ordered, labeled collection of tweets for one sub-task."""

    task: Task
    examples: tuple[tuple[Tweet, Label], ...]

    def __post_init__(self) -> None:
        for _, label in self.examples:
            if label.task is not self.task:
                raise ValidationError(
                    f"dataset task {self.task.value} mixed with {label.task.value} label"
                )

    @property
    def class_counts(self) -> dict[str, int]:
        """Histogram of label values over `examples` (recomputed, never stale)."""
        counts = {value: 0 for value in TASK_LABELS[self.task]}
        for _, label in self.examples:
            counts[label.value] += 1
        return counts

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(label.index for _, label in self.examples)

    @property
    def documents(self) -> list[list[str]]:
        return [list(tweet.tokens) for tweet, _ in self.examples]

    def __len__(self) -> int:
        return len(self.examples)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError(
                f"train_fraction must be in (0,1), got {self.train_fraction}"
            )


def _tweet_from_row(row_id: str, text: str) -> Tweet:
    return Tweet(id=row_id, raw_text=text, tokens=tuple(preprocess(text)))


def load_olid(path: str | Path, task: Task) -> Dataset:
    """Load an OLID-format TSV, keeping rows labeled for `task`.

    Rows whose label column is the literal string NULL (or empty) are
    skipped.  File order is preserved.  Raises ParseError on a row with
    the wrong column count and ValidationError on an unknown label code,
    both naming the 1-based line number.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    column = _TASK_COLUMN[task]
    codes = TSV_CODES[task]
    examples: list[tuple[Tweet, Label]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n")
        if tuple(header.split("\t")) != OLID_HEADER:
            raise ParseError(f"{path}: line 1: expected header {' '.join(OLID_HEADER)}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if line == "":
                continue
            fields = line.split("\t")
            if len(fields) != len(OLID_HEADER):
                raise ParseError(
                    f"{path}: line {lineno}: expected {len(OLID_HEADER)} columns, "
                    f"got {len(fields)}"
                )
            code = fields[column]
            if code in ("NULL", ""):
                continue
            if code not in codes:
                raise ValidationError(
                    f"{path}: line {lineno}: unknown task-{task.value} label {code!r}"
                )
            tweet = _tweet_from_row(fields[0], fields[1])
            examples.append((tweet, Label(task, codes[code])))
    return Dataset(task=task, examples=tuple(examples))


def load_olid_texts(path: str | Path) -> list[list[str]]:
    """Token lists of every row in an OLID TSV, ignoring label columns.

    Used when an embedding corpus should literally cover the whole file
    rather than one task's labeled subset.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    docs: list[list[str]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n")
        if tuple(header.split("\t")) != OLID_HEADER:
            raise ParseError(f"{path}: line 1: expected header {' '.join(OLID_HEADER)}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if line == "":
                continue
            fields = line.split("\t")
            if len(fields) != len(OLID_HEADER):
                raise ParseError(
                    f"{path}: line {lineno}: expected {len(OLID_HEADER)} columns, "
                    f"got {len(fields)}"
                )
            docs.append(preprocess(fields[1]))
    return docs


def save_olid(dataset: Dataset, path: str | Path) -> None:
    """Serialize a dataset back to the OLID TSV schema.

    Only the dataset's own task column is filled; the others are NULL.
    Tabs/newlines inside raw text (absent from real OLID data) are
    replaced by spaces so the file stays well-formed.
    """
    path = Path(path)
    column = _TASK_COLUMN[dataset.task]
    to_code = LABEL_TO_CODE[dataset.task]
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(OLID_HEADER) + "\n")
        for tweet, label in dataset.examples:
            fields = [tweet.id, re.sub(r"[\t\r\n]", " ", tweet.raw_text), "NULL", "NULL", "NULL"]
            fields[column] = to_code[label.value]
            fh.write("\t".join(fields) + "\n")


def _apportion_train_counts(class_sizes: list[int], fraction: float) -> list[int]:
    """Per-class train counts: floor of the overall train size, allocated by
    largest fractional remainder.

    This is the allocation that reproduces the 80/20 per-class counts of the
    source data exactly (e.g. 3876 -> 3101 train and 2407 -> 1925 train at
    fraction 0.8); neither pure floor nor round-half-up does.
    """
    frac = Fraction(fraction)
    total = int(frac * sum(class_sizes))
    ideals = [frac * n for n in class_sizes]
    base = [int(i) for i in ideals]
    leftover = total - sum(base)
    order = sorted(range(len(class_sizes)), key=lambda c: (-(ideals[c] - base[c]), c))
    for c in order[:leftover]:
        base[c] += 1
    return base


def stratified_split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Split into (train, dev), per-class when `spec.stratified`.

    Deterministic for a fixed seed; both splits preserve the dataset's
    original example order.  Requires every class to have at least two
    examples (otherwise a stratum cannot span both splits).
    """
    counts = dataset.class_counts
    for value, count in counts.items():
        if 0 < count < 2:
            raise ValidationError(
                f"cannot stratify: class {value} has only {count} example"
            )
    rng = np.random.default_rng(spec.seed)
    n = len(dataset.examples)
    train_idx: set[int] = set()
    if spec.stratified:
        values = [v for v in TASK_LABELS[dataset.task] if counts[v] > 0]
        sizes = [counts[v] for v in values]
        train_sizes = dict(zip(values, _apportion_train_counts(sizes, spec.train_fraction)))
        by_class: dict[str, list[int]] = {v: [] for v in values}
        for i, (_, label) in enumerate(dataset.examples):
            by_class[label.value].append(i)
        for value in values:
            members = np.array(by_class[value])
            picked = rng.permutation(len(members))[: train_sizes[value]]
            train_idx.update(members[picked].tolist())
    else:
        total = int(Fraction(spec.train_fraction) * n)
        picked = rng.permutation(n)[:total]
        train_idx.update(picked.tolist())
    train_ex = tuple(ex for i, ex in enumerate(dataset.examples) if i in train_idx)
    dev_ex = tuple(ex for i, ex in enumerate(dataset.examples) if i not in train_idx)
    return (
        Dataset(task=dataset.task, examples=train_ex),
        Dataset(task=dataset.task, examples=dev_ex),
    )


def with_examples(dataset: Dataset, examples) -> Dataset:
    """Dataset sharing `dataset`'s task with a new example tuple."""
    return replace(dataset, examples=tuple(examples))

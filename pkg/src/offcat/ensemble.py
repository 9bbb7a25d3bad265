"""Combining fitted classifiers: hard voting, soft voting, and probability
averaging.

Members of an ensemble are full text pipelines (vocabulary + representation
+ fitted model), so members trained on differently enhanced data still
compose: prediction on raw tokens routes each member through its own
feature space.  Every tie, anywhere, goes to the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .features import Representation, Vocabulary, vectorize_one
from .learners import ProbabilisticClassifier


class VoteMode(Enum):
    HARD = "hard"
    SOFT = "soft"
    AVERAGE = "average"


def hard_vote(labels: Sequence[int], n_classes: int) -> int:
    """Modal label; ties broken by the lowest class index."""
    if len(labels) == 0:
        raise ValidationError("hard_vote needs at least one label")
    counts = np.bincount(np.asarray(labels), minlength=n_classes)
    return int(np.argmax(counts))


def soft_vote(distributions: Sequence[np.ndarray], weights: Sequence[float] | None = None) -> int:
    """Argmax of the weighted elementwise sum of member distributions."""
    summed = _weighted_sum(distributions, weights)
    return int(np.argmax(summed))


def _weighted_sum(distributions: Sequence[np.ndarray], weights: Sequence[float] | None) -> np.ndarray:
    if len(distributions) == 0:
        raise ValidationError("need at least one distribution")
    lengths = {len(d) for d in distributions}
    if len(lengths) != 1:
        raise ValidationError(f"member distributions of unequal length: {sorted(lengths)}")
    if weights is None:
        weights = [1.0] * len(distributions)
    if len(weights) != len(distributions):
        raise ValidationError("weights length does not match members")
    if any(w < 0 for w in weights):
        raise ValidationError("weights must be nonnegative")
    out = np.zeros(lengths.pop())
    for w, d in zip(weights, distributions):
        out += w * np.asarray(d)
    return out


def average_proba(members: Sequence["TextClassifier"], x) -> np.ndarray:
    """Unweighted mean of member distributions for one input.

    `x` is either a token sequence (each member applies its own feature
    pipeline) or a SparseVector shared by all members.
    """
    dists = [_member_proba(m, x) for m in members]
    summed = _weighted_sum(dists, None)
    return summed / len(dists)


def _member_proba(member, x) -> np.ndarray:
    if hasattr(x, "indices") and hasattr(x, "dim"):  # SparseVector
        return member.predict_proba(x)
    return member.predict_proba_tokens(list(x))


@dataclass
class PipelineMember:
    """A fitted model bound to the feature pipeline it was trained with."""

    model: ProbabilisticClassifier
    vocabulary: Vocabulary
    representation: Representation
    name: str = ""
    provenance: str = ""  # how the training data was enhanced
    _idf: np.ndarray | None = field(default=None, repr=False)

    def _vectorize(self, tokens: Sequence[str]):
        if self._idf is None:
            self._idf = self.vocabulary.idf()
        return vectorize_one(tokens, self.vocabulary, self.representation, self._idf)

    def predict_proba_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        return self.model.predict_proba(self._vectorize(tokens))

    def predict_proba_tokens_batch(self, docs: Sequence[Sequence[str]]) -> np.ndarray:
        rows = [self._vectorize(doc) for doc in docs]
        if not rows:
            return np.zeros((0, self.n_classes))
        return np.vstack(self.model.predict_proba_batch(rows))

    def predict_tokens(self, tokens: Sequence[str]) -> int:
        return int(np.argmax(self.predict_proba_tokens(tokens)))

    def predict_tokens_batch(self, docs: Sequence[Sequence[str]]) -> list[int]:
        return [int(np.argmax(p)) for p in self.predict_proba_tokens_batch(docs)]

    @property
    def n_classes(self) -> int:
        return len(self.model.classes_)


@dataclass
class Ensemble:
    """Heterogeneous-member ensemble over raw-token inputs.

    Members may be PipelineMembers or nested Ensembles; each must expose
    predict_proba_tokens and n_classes over the same class set.  SOFT mode
    exposes the weighted sum normalized to a distribution, so a soft-vote
    ensemble can itself serve as a probability-emitting member.
    """

    members: list
    mode: VoteMode = VoteMode.SOFT
    weights: list[float] | None = None

    def __post_init__(self) -> None:
        if len(self.members) < 1:
            raise ValidationError("ensemble needs at least one member")
        if self.weights is not None and len(self.weights) != len(self.members):
            raise ValidationError("weights length does not match members")

    @property
    def n_classes(self) -> int:
        return self.members[0].n_classes

    def _combine(self, stacks: list[np.ndarray]) -> np.ndarray:
        """stacks: per-member (n, K) probability grids -> combined (n, K)."""
        n = stacks[0].shape[0]
        k = self.n_classes
        if self.mode is VoteMode.HARD:
            out = np.zeros((n, k))
            for grid in stacks:
                out[np.arange(n), np.argmax(grid, axis=1)] += 1.0
            return out / out.sum(axis=1, keepdims=True)
        if self.mode is VoteMode.SOFT:
            weights = self.weights if self.weights is not None else [1.0] * len(stacks)
            summed = sum(w * g for w, g in zip(weights, stacks))
            totals = summed.sum(axis=1, keepdims=True)
            uniform = np.full((n, k), 1.0 / k)
            return np.where(totals > 0, summed / np.maximum(totals, 1e-300), uniform)
        return sum(stacks) / len(stacks)

    def predict_proba_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        return self.predict_proba_tokens_batch([list(tokens)])[0]

    def predict_proba_tokens_batch(self, docs: Sequence[Sequence[str]]) -> np.ndarray:
        if len(docs) == 0:
            return np.zeros((0, self.n_classes))
        stacks = [m.predict_proba_tokens_batch(docs) for m in self.members]
        widths = {s.shape[1] for s in stacks}
        if len(widths) != 1:
            raise ValidationError(f"member distributions of unequal length: {sorted(widths)}")
        return self._combine(stacks)

    def predict_tokens(self, tokens: Sequence[str]) -> int:
        return self.predict_tokens_batch([list(tokens)])[0]

    def predict_tokens_batch(self, docs: Sequence[Sequence[str]]) -> list[int]:
        return [int(np.argmax(p)) for p in self.predict_proba_tokens_batch(docs)]


def average_proba_dists(distributions: Sequence[np.ndarray]) -> np.ndarray:
    """Mean of already-computed member distributions."""
    return _weighted_sum(distributions, None) / len(distributions)

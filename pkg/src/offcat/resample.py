"""Sampling-based data enhancement over feature matrices.

Random over-/undersampling, SMOTE interpolation, and the three NearMiss
distance heuristics.  All methods are deterministic functions of
(data, plan): randomness comes only from the plan's seed, distances are
Euclidean, and every ranking tie is broken by the lower row index.

Default targets: oversampling raises every class to the majority count;
undersampling lowers every class to the minority count.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import Dataset, Label, Tweet, with_examples
from .errors import ValidationError
from .features import FeatureMatrix, SparseVector, sparse_from_pairs


class SampleMethod(Enum):
    NONE = "none"
    ROS = "ros"
    RUS = "rus"
    SMOTE = "smote"
    NEARMISS1 = "nearmiss1"
    NEARMISS2 = "nearmiss2"
    NEARMISS3 = "nearmiss3"


OVERSAMPLERS = (SampleMethod.ROS, SampleMethod.SMOTE)
UNDERSAMPLERS = (SampleMethod.RUS, SampleMethod.NEARMISS1, SampleMethod.NEARMISS2, SampleMethod.NEARMISS3)


@dataclass(frozen=True)
class ResamplePlan:
    method: SampleMethod = SampleMethod.NONE
    k_neighbors: int = 5  # SMOTE
    n_ref: int = 3  # NearMiss reference count
    seed: int = 0
    targets: dict[int, int] | None = None  # class index -> desired count

    def __post_init__(self) -> None:
        if self.k_neighbors < 1:
            raise ValidationError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.n_ref < 1:
            raise ValidationError(f"n_ref must be >= 1, got {self.n_ref}")
        if self.targets is not None and any(v < 0 for v in self.targets.values()):
            raise ValidationError("negative target count")


def resolve_targets(data: FeatureMatrix, plan: ResamplePlan) -> dict[int, int]:
    """Desired per-class counts: explicit plan targets, else the default rule."""
    counts = data.class_counts()
    if not counts:
        raise ValidationError("cannot resample an empty matrix")
    if plan.targets is not None:
        unknown = set(plan.targets) - set(counts)
        if unknown:
            raise ValidationError(f"targets reference absent classes: {sorted(unknown)}")
        return {c: plan.targets.get(c, n) for c, n in counts.items()}
    if plan.method in OVERSAMPLERS:
        goal = max(counts.values())
    elif plan.method in UNDERSAMPLERS:
        goal = min(counts.values())
    else:
        return dict(counts)
    return {c: goal for c in counts}


def _class_rows(data: FeatureMatrix, cls: int) -> np.ndarray:
    return np.flatnonzero(np.asarray(data.labels) == cls)


def _dense(rows: list[SparseVector]) -> np.ndarray:
    out = np.zeros((len(rows), rows[0].dim if rows else 0))
    for i, r in enumerate(rows):
        out[i, list(r.indices)] = r.values
    return out


class NeighborIndex:
    """Brute-force Euclidean nearest-neighbor index over sparse rows.

    Query results are sorted by nondecreasing distance with ties broken by
    the lower point index; the query point itself is excluded.
    """

    def __init__(self, points: list[SparseVector]):
        self.points = points
        self._dense = _dense(points)

    def __len__(self) -> int:
        return len(self.points)

    def distances_from(self, x: np.ndarray) -> np.ndarray:
        diff = self._dense - x
        return np.sqrt((diff * diff).sum(axis=1))

    def query(self, i: int, k: int) -> list[int]:
        """Indices of the k nearest points to point i (excluding i)."""
        d = self.distances_from(self._dense[i])
        order = np.lexsort((np.arange(len(d)), d))
        order = order[order != i]
        return order[:k].tolist()


def random_oversample(data: FeatureMatrix, plan: ResamplePlan) -> FeatureMatrix:
    """Duplicate rows of below-target classes uniformly at random."""
    targets = resolve_targets(data, plan)
    rng = np.random.default_rng(plan.seed)
    new_rows: list[SparseVector] = list(data.rows)
    new_labels: list[int] = list(data.labels)
    for cls in sorted(targets):
        members = _class_rows(data, cls)
        need = targets[cls] - len(members)
        if need <= 0:
            continue
        if len(members) == 0:
            raise ValidationError(f"class {cls} is empty but has target {targets[cls]}")
        draws = rng.integers(0, len(members), size=need)
        for d in draws:
            new_rows.append(data.rows[members[d]])
            new_labels.append(cls)
    return FeatureMatrix(tuple(new_rows), tuple(new_labels), data.representation)


def random_undersample(data: FeatureMatrix, plan: ResamplePlan) -> FeatureMatrix:
    """Remove rows of above-target classes uniformly at random without replacement."""
    targets = resolve_targets(data, plan)
    counts = data.class_counts()
    for cls, want in targets.items():
        if want > counts[cls]:
            raise ValidationError(
                f"undersample target {want} exceeds count {counts[cls]} for class {cls}"
            )
    rng = np.random.default_rng(plan.seed)
    keep = np.ones(len(data.rows), dtype=bool)
    for cls in sorted(targets):
        members = _class_rows(data, cls)
        drop = len(members) - targets[cls]
        if drop <= 0:
            continue
        perm = rng.permutation(len(members))
        keep[members[perm[:drop]]] = False
    rows = tuple(r for r, k in zip(data.rows, keep) if k)
    labels = tuple(y for y, k in zip(data.labels, keep) if k)
    return FeatureMatrix(rows, labels, data.representation)


def _interpolate(a: SparseVector, b: SparseVector, u: float) -> SparseVector:
    """a + u * (b - a) as a sparse vector."""
    acc = dict(zip(a.indices, a.values))
    for i, v in zip(b.indices, b.values):
        acc[i] = acc.get(i, 0.0) + u * v
    for i, v in zip(a.indices, a.values):
        acc[i] = acc[i] - u * v
    return sparse_from_pairs(a.dim, acc.items())


def smote(data: FeatureMatrix, plan: ResamplePlan) -> FeatureMatrix:
    """Synthesize minority rows on segments between same-class neighbors.

    Per synthetic row the RNG is consumed in the order: source row draw,
    neighbor draw among the source's k nearest same-class rows, then the
    interpolation coefficient u ~ U[0,1].  k is clamped to class size - 1.
    """
    targets = resolve_targets(data, plan)
    rng = np.random.default_rng(plan.seed)
    new_rows: list[SparseVector] = list(data.rows)
    new_labels: list[int] = list(data.labels)
    for cls in sorted(targets):
        members = _class_rows(data, cls)
        need = targets[cls] - len(members)
        if need <= 0:
            continue
        if len(members) < 2:
            raise ValidationError(
                f"SMOTE needs >= 2 examples in class {cls}, got {len(members)}"
            )
        index = NeighborIndex([data.rows[i] for i in members])
        k = min(plan.k_neighbors, len(members) - 1)
        neighbor_lists = [index.query(i, k) for i in range(len(members))]
        for _ in range(need):
            src = int(rng.integers(0, len(members)))
            nb = neighbor_lists[src][int(rng.integers(0, k))]
            u = float(rng.random())
            new_rows.append(_interpolate(data.rows[members[src]], data.rows[members[nb]], u))
            new_labels.append(cls)
    return FeatureMatrix(tuple(new_rows), tuple(new_labels), data.representation)


def _reference_rows(data: FeatureMatrix, cls: int) -> np.ndarray:
    """Reference ("minority") rows used when undersampling class `cls`:
    the union of all strictly smaller classes, falling back to every
    other class when none is smaller."""
    counts = data.class_counts()
    labels = np.asarray(data.labels)
    smaller = [c for c, n in counts.items() if n < counts[cls]]
    if smaller:
        mask = np.isin(labels, smaller)
    else:
        mask = labels != cls
    return np.flatnonzero(mask)


def near_miss(data: FeatureMatrix, plan: ResamplePlan, variant: int) -> FeatureMatrix:
    """NearMiss undersampling, variants 1-3.

    Variant 1 keeps majority rows whose average distance to their n_ref
    closest reference rows is smallest; variant 2 uses the n_ref farthest
    reference rows instead.  Variant 3 first pools, per reference row, its
    n_ref nearest majority rows, then keeps the pool rows whose average
    distance to their n_ref closest reference rows is largest.
    """
    if variant not in (1, 2, 3):
        raise ValidationError(f"NearMiss variant must be 1, 2 or 3, got {variant}")
    targets = resolve_targets(data, plan)
    counts = data.class_counts()
    keep = np.ones(len(data.rows), dtype=bool)
    for cls in sorted(targets):
        want = targets[cls]
        if want > counts[cls]:
            raise ValidationError(
                f"undersample target {want} exceeds count {counts[cls]} for class {cls}"
            )
        if want == counts[cls]:
            continue
        members = _class_rows(data, cls)
        ref = _reference_rows(data, cls)
        if len(ref) == 0:
            raise ValidationError(f"no reference rows to undersample class {cls} against")
        ref_index = NeighborIndex([data.rows[i] for i in ref])
        n_ref = min(plan.n_ref, len(ref))
        member_dense = _dense([data.rows[i] for i in members])
        # dists[i, j]: distance from majority row members[i] to reference row ref[j]
        dists = np.stack([ref_index.distances_from(row) for row in member_dense])
        sorted_d = np.sort(dists, axis=1)
        if variant == 1:
            score = sorted_d[:, :n_ref].mean(axis=1)
            order = np.lexsort((np.arange(len(members)), score))
        elif variant == 2:
            score = sorted_d[:, len(ref) - n_ref :].mean(axis=1)
            order = np.lexsort((np.arange(len(members)), score))
        else:
            # stage 1: per reference row, its n_ref nearest majority rows
            pool_mask = np.zeros(len(members), dtype=bool)
            for j in range(len(ref)):
                col = dists[:, j]
                nearest = np.lexsort((np.arange(len(members)), col))[: min(plan.n_ref, len(members))]
                pool_mask[nearest] = True
            # stage 2: largest average distance to the n_ref closest references
            score = sorted_d[:, :n_ref].mean(axis=1)
            order = np.lexsort((np.arange(len(members)), -score))
            in_pool = order[pool_mask[order]]
            outside = order[~pool_mask[order]]
            # pool smaller than the target: extend with the remaining rows
            # under the same ranking so the count contract still holds
            order = np.concatenate([in_pool, outside])
        drop = order[want:]
        keep[members[drop]] = False
    rows = tuple(r for r, k in zip(data.rows, keep) if k)
    labels = tuple(y for y, k in zip(data.labels, keep) if k)
    return FeatureMatrix(rows, labels, data.representation)


def apply_plan(data: FeatureMatrix, plan: ResamplePlan) -> FeatureMatrix:
    """Dispatch on the plan's method; NONE returns the input unchanged."""
    method = plan.method
    if method is SampleMethod.NONE:
        return data
    if method is SampleMethod.ROS:
        return random_oversample(data, plan)
    if method is SampleMethod.RUS:
        return random_undersample(data, plan)
    if method is SampleMethod.SMOTE:
        return smote(data, plan)
    return near_miss(data, plan, int(method.value[-1]))


def random_oversample_text(dataset: Dataset, seed: int, targets: dict[str, int] | None = None) -> Dataset:
    """Text-level random oversampling: duplicate whole tweets.

    Mirrors `random_oversample` but operates before vectorization, so the
    duplicated rows flow through vocabulary fitting like the synthetic
    paraphrases do.  Duplicates carry provenance "duplicate" and a
    disambiguated id.
    """
    counts = dataset.class_counts
    present = {v: n for v, n in counts.items() if n > 0}
    if targets is None:
        goal = max(present.values())
        targets = {v: goal for v in present}
    rng = np.random.default_rng(seed)
    extra: list[tuple[Tweet, Label]] = []
    by_class: dict[str, list[int]] = {v: [] for v in present}
    for i, (_, label) in enumerate(dataset.examples):
        by_class[label.value].append(i)
    for value in sorted(targets):
        if value not in present:
            raise ValidationError(f"class {value} is empty but has target {targets[value]}")
        members = by_class[value]
        need = targets[value] - len(members)
        for j in range(max(0, need)):
            src_tweet, src_label = dataset.examples[members[int(rng.integers(0, len(members)))]]
            dup = Tweet(
                id=f"{src_tweet.id}#dup{j}",
                raw_text=src_tweet.raw_text,
                tokens=src_tweet.tokens,
                provenance="duplicate",
            )
            extra.append((dup, src_label))
    return with_examples(dataset, tuple(dataset.examples) + tuple(extra))

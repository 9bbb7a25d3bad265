"""Resampling suite: ROS, RUS, SMOTE, NearMiss, and their contracts.

The NearMiss tests include an independent brute-force oracle that ranks
majority rows with plain dense loops, deliberately sharing no code with
the implementation under test.
"""

from collections import Counter

import numpy as np
import pytest

from offcat.corpus import Task
from offcat.errors import ValidationError
from offcat.features import FeatureMatrix, Representation, sparse_from_pairs
from offcat.resample import (
    NeighborIndex,
    ResamplePlan,
    SampleMethod,
    _interpolate,
    apply_plan,
    near_miss,
    random_oversample,
    random_oversample_text,
    random_undersample,
    resolve_targets,
    smote,
)

from conftest import dense_matrix, random_token_dataset


def random_matrix(rng, n_rows, dim, class_sizes):
    points = rng.random((n_rows, dim)) * 4.0
    points[rng.random((n_rows, dim)) < 0.5] = 0.0  # sparse-ish
    labels = []
    for cls, size in enumerate(class_sizes):
        labels += [cls] * size
    rows = tuple(
        sparse_from_pairs(dim, [(j, points[i, j]) for j in range(dim)]) for i in range(n_rows)
    )
    return FeatureMatrix(rows, tuple(labels), Representation.COUNTS), points


# ----------------------------------------------------------------- oracles


def brute_force_near_miss(points, labels, variant, n_ref, keep_per_class):
    """Dense-loop reimplementation of the NearMiss selection rules."""
    labels = np.asarray(labels)
    counts = Counter(labels.tolist())
    kept = []
    for cls in sorted(counts):
        members = [i for i in range(len(labels)) if labels[i] == cls]
        want = keep_per_class.get(cls, len(members))
        if want >= len(members):
            kept += members
            continue
        smaller = [c for c in counts if counts[c] < counts[cls]]
        if smaller:
            refs = [i for i in range(len(labels)) if labels[i] in smaller]
        else:
            refs = [i for i in range(len(labels)) if labels[i] != cls]
        k = min(n_ref, len(refs))
        dists = np.zeros((len(members), len(refs)))
        for a, i in enumerate(members):
            for b, j in enumerate(refs):
                diff = points[i] - points[j]
                dists[a, b] = np.sqrt((diff * diff).sum())
        scores = []
        for a in range(len(members)):
            row = np.sort(dists[a])
            if variant == 1 or variant == 3:
                scores.append(row[:k].mean())
            else:
                scores.append(row[len(refs) - k :].mean())
        scores = np.array(scores)
        if variant in (1, 2):
            order = np.lexsort((np.arange(len(members)), scores))
        else:
            pool = set()
            for b in range(len(refs)):
                col_order = np.lexsort((np.arange(len(members)), dists[:, b]))
                pool.update(col_order[: min(n_ref, len(members))].tolist())
            order = np.lexsort((np.arange(len(members)), -scores))
            in_pool = [a for a in order if a in pool]
            outside = [a for a in order if a not in pool]
            order = np.array(in_pool + outside)
        kept += [members[a] for a in order[:want]]
    return sorted(kept)


# ------------------------------------------------------------------- tests


class TestTargets:
    def test_oversample_default_targets_majority(self):
        m, _ = random_matrix(np.random.default_rng(0), 3520, 4, [3101, 419])
        plan = ResamplePlan(method=SampleMethod.ROS, seed=1)
        assert resolve_targets(m, plan) == {0: 3101, 1: 3101}
        out = random_oversample(m, plan)
        assert out.class_counts() == {0: 3101, 1: 3101}

    def test_undersample_default_targets_minority(self):
        m, _ = random_matrix(np.random.default_rng(0), 3520, 4, [3101, 419])
        plan = ResamplePlan(method=SampleMethod.RUS, seed=1)
        out = random_undersample(m, plan)
        assert out.class_counts() == {0: 419, 1: 419}

    def test_plan_validation(self):
        with pytest.raises(ValidationError):
            ResamplePlan(k_neighbors=0)
        with pytest.raises(ValidationError):
            ResamplePlan(n_ref=0)
        with pytest.raises(ValidationError):
            ResamplePlan(targets={0: -1})


class TestRandomOversample:
    def test_balanced_input_unchanged(self):
        m, _ = random_matrix(np.random.default_rng(0), 8, 3, [4, 4])
        out = random_oversample(m, ResamplePlan(method=SampleMethod.ROS, seed=0))
        assert out.rows == m.rows and out.labels == m.labels

    def test_single_source_row_duplicated(self):
        m = dense_matrix([(1.0, 0.0)] * 3 + [(0.0, 2.0)], [0, 0, 0, 1])
        out = random_oversample(m, ResamplePlan(method=SampleMethod.ROS, targets={1: 3}, seed=0))
        minority_rows = [r for r, y in zip(out.rows, out.labels) if y == 1]
        assert len(minority_rows) == 3
        assert all(r == m.rows[3] for r in minority_rows)

    def test_multiset_superset(self):
        m, _ = random_matrix(np.random.default_rng(1), 30, 3, [22, 8])
        out = random_oversample(m, ResamplePlan(method=SampleMethod.ROS, seed=5))
        assert Counter(out.rows) >= Counter(m.rows)
        assert out.rows[: len(m.rows)] == m.rows

    def test_empty_class_with_target_rejected(self):
        m = dense_matrix([(1.0, 0.0)], [0])
        with pytest.raises(ValidationError):
            random_oversample(m, ResamplePlan(method=SampleMethod.ROS, targets={1: 3}, seed=0))


class TestRandomUndersample:
    def test_balanced_unchanged(self):
        m, _ = random_matrix(np.random.default_rng(0), 8, 3, [4, 4])
        out = random_undersample(m, ResamplePlan(method=SampleMethod.RUS, seed=0))
        assert out.rows == m.rows

    def test_exactly_one_survivor(self):
        m = dense_matrix([(1.0, 0.0), (2.0, 0.0), (0.0, 1.0), (0.0, 2.0)], [0, 0, 1, 1])
        out = random_undersample(m, ResamplePlan(method=SampleMethod.RUS, targets={0: 1}, seed=7))
        kept0 = [r for r, y in zip(out.rows, out.labels) if y == 0]
        assert len(kept0) == 1 and kept0[0] in m.rows[:2]

    def test_subset(self):
        m, _ = random_matrix(np.random.default_rng(1), 30, 3, [22, 8])
        out = random_undersample(m, ResamplePlan(method=SampleMethod.RUS, seed=5))
        assert Counter(out.rows) <= Counter(m.rows)

    def test_target_above_count_rejected(self):
        m = dense_matrix([(1.0, 0.0), (0.0, 1.0)], [0, 1])
        with pytest.raises(ValidationError):
            random_undersample(m, ResamplePlan(method=SampleMethod.RUS, targets={0: 5}, seed=0))


class TestSmote:
    def test_interpolation_endpoint(self):
        a = sparse_from_pairs(3, [(0, 1.0), (2, 4.0)])
        b = sparse_from_pairs(3, [(1, 2.0), (2, 8.0)])
        assert _interpolate(a, b, 0.0) == a

    def test_synthetic_on_segment(self):
        m = dense_matrix([(0.0, 0.0), (2.0, 0.0)] + [(9.0, 9.0)] * 5, [1, 1, 0, 0, 0, 0, 0])
        out = smote(m, ResamplePlan(method=SampleMethod.SMOTE, k_neighbors=1, seed=4))
        for r, y in zip(out.rows[7:], out.labels[7:]):
            assert y == 1
            dense = r.to_dense()
            assert dense[1] == 0.0 and 0.0 <= dense[0] <= 2.0

    def test_neighbor_is_nearest(self):
        """Brute-force distances: (0,0)'s single neighbor is (0,4), never (10,10)."""
        pts = [(0.0, 0.0), (0.0, 4.0), (10.0, 10.0)]
        dists = {
            (i, j): np.hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1])
            for i in range(3)
            for j in range(3)
            if i != j
        }
        assert dists[(0, 1)] < dists[(0, 2)]
        m = dense_matrix(list(pts) + [(50.0, 50.0)] * 9, [1, 1, 1] + [0] * 9)
        out = smote(m, ResamplePlan(method=SampleMethod.SMOTE, k_neighbors=1, seed=11))
        for r, y in zip(out.rows[12:], out.labels[12:]):
            p = r.to_dense()
            src_nbr_pairs = [(0, 1), (1, 0), (2, 1)]  # k=1 neighbor of each point
            on_some_segment = False
            for s, t in src_nbr_pairs:
                a, b = np.array(pts[s]), np.array(pts[t])
                seg = b - a
                tt = 0.0 if seg @ seg == 0 else np.clip((p - a) @ seg / (seg @ seg), 0, 1)
                if np.linalg.norm(p - (a + tt * seg)) < 1e-9:
                    on_some_segment = True
            assert on_some_segment

    def test_counts_meet_targets(self):
        m, _ = random_matrix(np.random.default_rng(3), 40, 5, [30, 10])
        out = smote(m, ResamplePlan(method=SampleMethod.SMOTE, seed=0))
        assert out.class_counts() == {0: 30, 1: 30}
        assert out.rows[: len(m.rows)] == m.rows

    def test_singleton_class_rejected(self):
        m = dense_matrix([(1.0, 0.0), (2.0, 0.0), (0.0, 1.0)], [0, 0, 1])
        with pytest.raises(ValidationError):
            smote(m, ResamplePlan(method=SampleMethod.SMOTE, seed=0))

    def test_deterministic(self):
        m, _ = random_matrix(np.random.default_rng(3), 40, 5, [30, 10])
        plan = ResamplePlan(method=SampleMethod.SMOTE, seed=12)
        assert smote(m, plan) == smote(m, plan)


class TestNearMiss:
    def test_nm1_keeps_central_majority(self):
        m = dense_matrix([(0.0,), (5.0,), (20.0,), (4.0,), (6.0,)], [0, 0, 0, 1, 1])
        plan = ResamplePlan(method=SampleMethod.NEARMISS1, n_ref=2, targets={0: 1, 1: 2})
        out = near_miss(m, plan, 1)
        kept = [r.to_dense()[0] for r, y in zip(out.rows, out.labels) if y == 0]
        assert kept == [5.0]  # avg dists: 4.5 for 0, 1.0 for 5, 15.5 for 20

    def test_nm2_same_when_refs_exhausted(self):
        m = dense_matrix([(0.0,), (5.0,), (20.0,), (4.0,), (6.0,)], [0, 0, 0, 1, 1])
        plan = ResamplePlan(method=SampleMethod.NEARMISS2, n_ref=2, targets={0: 1, 1: 2})
        out = near_miss(m, plan, 2)
        kept = [r.to_dense()[0] for r, y in zip(out.rows, out.labels) if y == 0]
        assert kept == [5.0]

    def test_duplicate_majority_zero_distance(self):
        pts = [(1.0, 1.0), (3.0, 2.0), (1.0, 1.0), (3.0, 2.0), (9.0, 9.0)]
        m = dense_matrix(pts, [0, 0, 0, 0, 1])
        # minority has a single point; keep the 2 closest-by-average rows
        plan = ResamplePlan(method=SampleMethod.NEARMISS1, n_ref=1, targets={0: 2, 1: 1})
        out = near_miss(m, plan, 1)
        kept_pts = sorted(tuple(r.to_dense()) for r, y in zip(out.rows, out.labels) if y == 0)
        # (3,2) duplicates are nearer to (9,9) than the (1,1) pair
        assert kept_pts == [(3.0, 2.0), (3.0, 2.0)]

    @pytest.mark.parametrize("variant", [1, 2, 3])
    def test_matches_brute_force(self, variant):
        rng = np.random.default_rng(17)
        for trial in range(8):
            sizes = [int(rng.integers(20, 60)), int(rng.integers(8, 18))]
            m, points = random_matrix(rng, sum(sizes), int(rng.integers(2, 8)), sizes)
            want = int(rng.integers(2, sizes[1]))
            plan = ResamplePlan(
                method=SampleMethod(f"nearmiss{variant}"), n_ref=3, targets={0: want}
            )
            out = near_miss(m, plan, variant)
            expected_idx = brute_force_near_miss(
                points, m.labels, variant, 3, {0: want, 1: sizes[1]}
            )
            expected_rows = [m.rows[i] for i in expected_idx]
            assert list(out.rows) == expected_rows, f"trial {trial}"

    def test_multiclass_reference_is_union_of_smaller(self):
        # three classes 6/4/2: undersampling the largest must rank against
        # classes 1+2; undersampling the middle against class 2 only
        rng = np.random.default_rng(5)
        m, points = random_matrix(rng, 12, 3, [6, 4, 2])
        plan = ResamplePlan(method=SampleMethod.NEARMISS1, n_ref=2)
        out = near_miss(m, plan, 1)
        assert out.class_counts() == {0: 2, 1: 2, 2: 2}
        expected_idx = brute_force_near_miss(points, m.labels, 1, 2, {0: 2, 1: 2, 2: 2})
        assert list(out.rows) == [m.rows[i] for i in expected_idx]

    def test_single_class_rejected(self):
        m = dense_matrix([(1.0,), (2.0,)], [0, 0])
        with pytest.raises(ValidationError):
            near_miss(m, ResamplePlan(method=SampleMethod.NEARMISS1, targets={0: 1}), 1)


class TestNeighborIndex:
    def test_query_sorted_and_excludes_self(self):
        rows = [sparse_from_pairs(2, [(0, float(x))]) for x in (0.0, 1.0, 3.0, 7.0)]
        idx = NeighborIndex(rows)
        assert idx.query(1, 2) == [0, 2]
        assert idx.query(0, 3) == [1, 2, 3]

    def test_tie_broken_by_index(self):
        rows = [sparse_from_pairs(1, [(0, v)]) for v in (0.0, 2.0, 2.0)]
        idx = NeighborIndex(rows)
        assert idx.query(0, 2) == [1, 2]


class TestApplyPlan:
    def test_none_is_identity(self):
        m, _ = random_matrix(np.random.default_rng(0), 10, 3, [6, 4])
        assert apply_plan(m, ResamplePlan()) is m

    @pytest.mark.parametrize(
        "method", ["ros", "rus", "smote", "nearmiss1", "nearmiss2", "nearmiss3"]
    )
    def test_dispatch_and_label_parity(self, method):
        m, _ = random_matrix(np.random.default_rng(2), 60, 4, [40, 20])
        out = apply_plan(m, ResamplePlan(method=SampleMethod(method), seed=3))
        assert len(out.rows) == len(out.labels)
        goal = 40 if method in ("ros", "smote") else 20
        assert out.class_counts() == {0: goal, 1: goal}


class TestTextLevelRos:
    def test_duplicates_flagged_and_counted(self):
        ds = random_token_dataset(Task.B, {"TARGETED": 9, "UNTARGETED": 3}, seed=0)
        out = random_oversample_text(ds, seed=2)
        assert out.class_counts == {"TARGETED": 9, "UNTARGETED": 9}
        dups = [t for t, _ in out.examples if t.provenance == "duplicate"]
        assert len(dups) == 6
        originals = {t.id: t for t, _ in ds.examples}
        for dup in dups:
            src = originals[dup.id.split("#")[0]]
            assert dup.tokens == src.tokens

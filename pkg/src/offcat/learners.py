"""Probabilistic classifiers over sparse feature matrices.

Eight learner kinds: multinomial Naive Bayes, softmax logistic regression,
one-vs-rest linear SVM with sigmoid calibration, CART-style decision tree
on Gini impurity, random forest, bagging, multiclass AdaBoost (SAMME), and
gradient-boosted trees on the logistic loss with second-order leaf weights
w = -G / (H + lambda).  A trivial majority-class learner is included so
the majority baseline flows through the same evaluation path.

Contracts shared by every model: predict_proba sums to 1, predict is the
argmax with ties broken by the lowest class index, fitting is
deterministic for a fixed (config, data), and fitted models serialize to
a JSON artifact that reproduces predictions bit-exactly on reload.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from math import log, sqrt
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse as sp

from .errors import ValidationError
from .features import FeatureMatrix, SparseVector, rows_to_csr

KINDS = ("majority", "nb", "logreg", "linsvm", "tree", "random_forest", "bagging", "adaboost", "gbt")

_DEFAULT_ESTIMATORS = {"random_forest": 100, "bagging": 100, "adaboost": 50, "gbt": 100}
_DEFAULT_DEPTH = {"tree": 10, "random_forest": 30, "bagging": 30, "adaboost": 1, "gbt": 6}


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters for every learner kind; unused fields are ignored.

    None for `n_estimators` / `max_depth` / `feature_fraction` means the
    per-kind default (100/50 estimators, kind-specific depth, sqrt(V)
    features per split for random forests, all features otherwise).
    """

    kind: str
    seed: int = 0
    # naive bayes
    alpha: float = 1.0
    # gradient-descent models (logreg, linsvm)
    l2: float = 1e-4
    learning_rate: float = 1.0
    epochs: int = 500
    # linear svm
    margin_c: float = 1.0
    calibrate: bool = True
    # trees and tree ensembles
    max_depth: int | None = None
    min_samples_leaf: int = 1
    n_estimators: int | None = None
    subsample: float = 1.0
    feature_fraction: float | None = None
    # gradient boosting
    shrinkage: float = 0.3
    leaf_l2: float = 1.0
    gain_threshold: float = 0.0
    second_order: bool = True

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown learner kind {self.kind!r}")
        for name in ("alpha", "l2", "learning_rate", "margin_c", "shrinkage", "leaf_l2", "gain_threshold"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.n_estimators is not None and self.n_estimators < 0:
            raise ValidationError("n_estimators must be >= 0")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")

    @property
    def estimators(self) -> int:
        if self.n_estimators is not None:
            return self.n_estimators
        return _DEFAULT_ESTIMATORS.get(self.kind, 100)

    @property
    def depth(self) -> int:
        if self.max_depth is not None:
            return self.max_depth
        return _DEFAULT_DEPTH.get(self.kind, 10)


# ---------------------------------------------------------------------------
# shared tree machinery


def _candidate_splits(X: sp.csc_matrix, stats: np.ndarray):
    """Enumerate every split candidate of a node, vectorized over all columns.

    `stats` is (n_rows, S) with column 0 holding the raw row count (ones);
    other columns are whatever the caller aggregates (class weights, or
    gradient/hessian sums).  Rows absent from a column count as value 0, so
    a virtual zero-block entry is injected per column before sorting.

    Returns (cand_col, cand_thr, left_stats, totals): for each candidate,
    the aggregated stats of rows with value <= threshold in that column.
    """
    n, n_cols = X.shape
    nnz_per_col = np.diff(X.indptr)
    cols = np.repeat(np.arange(n_cols), nnz_per_col)
    vals = X.data.astype(np.float64)
    ent_stats = stats[X.indices]
    totals = stats.sum(axis=0)

    if len(vals):
        # reduceat needs in-range indices and mis-sums empty segments; pad
        # with a zero row and overwrite empty columns afterwards
        padded_stats = np.vstack([ent_stats, np.zeros((1, stats.shape[1]))])
        col_sums = np.add.reduceat(padded_stats, X.indptr[:-1], axis=0)
        col_sums[nnz_per_col == 0] = 0.0
    else:
        col_sums = np.zeros((n_cols, stats.shape[1]))
    zero_cols = np.flatnonzero(nnz_per_col < n)
    all_cols = np.concatenate([cols, zero_cols])
    all_vals = np.concatenate([vals, np.zeros(len(zero_cols))])
    all_stats = np.vstack([ent_stats, totals[None, :] - col_sums[zero_cols]])

    order = np.lexsort((all_vals, all_cols))
    c = all_cols[order]
    v = all_vals[order]
    s = all_stats[order]
    if len(c) == 0:
        return c, v, s, totals
    cum = np.cumsum(s, axis=0)
    new_col = np.empty(len(c), dtype=bool)
    new_col[0] = True
    new_col[1:] = c[1:] != c[:-1]
    seg_id = np.cumsum(new_col) - 1
    padded = np.vstack([np.zeros((1, s.shape[1])), cum])
    seg_base = padded[np.flatnonzero(new_col)]

    boundary = np.flatnonzero((c[:-1] == c[1:]) & (v[1:] > v[:-1]))
    cand_col = c[boundary].astype(np.int64)
    cand_thr = (v[boundary] + v[boundary + 1]) / 2.0
    left_stats = cum[boundary] - seg_base[seg_id[boundary]]
    return cand_col, cand_thr, left_stats, totals


def _column_values(Xc: sp.csc_matrix, col: int, n: int) -> np.ndarray:
    start, end = Xc.indptr[col], Xc.indptr[col + 1]
    dense = np.zeros(n)
    dense[Xc.indices[start:end]] = Xc.data[start:end]
    return dense


def _pick_best(gains: np.ndarray, valid: np.ndarray):
    if not valid.any():
        return None
    gains = np.where(valid, gains, -np.inf)
    best = int(np.argmax(gains))  # first max: lowest column, then lowest threshold
    return best, gains[best]


def _grow_gini(
    X: sp.csr_matrix,
    y: np.ndarray,
    w: np.ndarray,
    n_classes: int,
    depth_left: int,
    min_leaf: int,
    rng: np.random.Generator | None,
    n_subfeatures: int | None,
) -> dict:
    """CART node on weighted Gini impurity; leaves hold the class-weight
    distribution.  Every accepted split strictly decreases weighted Gini."""
    class_w = np.bincount(y, weights=w, minlength=n_classes)
    total_w = class_w.sum()
    dist = class_w / total_w if total_w > 0 else np.full(n_classes, 1.0 / n_classes)
    leaf = {"value": dist.tolist()}
    n = X.shape[0]
    if depth_left == 0 or n < 2 * min_leaf or (class_w > 0).sum() < 2:
        return leaf

    stats = np.zeros((n, 1 + n_classes))
    stats[:, 0] = 1.0
    stats[np.arange(n), 1 + y] = w
    Xc = X.tocsc()
    cand_col, cand_thr, left, totals = _candidate_splits(Xc, stats)
    if len(cand_col) == 0:
        return leaf
    nl = left[:, 0]
    nr = totals[0] - nl
    wl = left[:, 1:]
    wr = totals[None, 1:] - wl
    WL = wl.sum(axis=1)
    WR = wr.sum(axis=1)
    # g(side) = W_side * gini(side) = W_side - sum_k w_k^2 / W_side
    with np.errstate(divide="ignore", invalid="ignore"):
        gl = WL - (wl * wl).sum(axis=1) / WL
        gr = WR - (wr * wr).sum(axis=1) / WR
    gp = total_w - (class_w * class_w).sum() / total_w
    decrease = (gp - gl - gr) / total_w
    valid = (nl >= min_leaf) & (nr >= min_leaf) & (WL > 0) & (WR > 0)
    if n_subfeatures is not None and n_subfeatures < X.shape[1]:
        allowed = np.zeros(X.shape[1], dtype=bool)
        allowed[rng.choice(X.shape[1], size=n_subfeatures, replace=False)] = True
        valid &= allowed[cand_col]
    picked = _pick_best(decrease, valid)
    if picked is None or picked[1] <= 1e-12:
        return leaf
    best = picked[0]
    col, thr = int(cand_col[best]), float(cand_thr[best])
    mask = _column_values(Xc, col, n) <= thr
    return {
        "feature": col,
        "threshold": thr,
        "left": _grow_gini(X[mask], y[mask], w[mask], n_classes, depth_left - 1, min_leaf, rng, n_subfeatures),
        "right": _grow_gini(X[~mask], y[~mask], w[~mask], n_classes, depth_left - 1, min_leaf, rng, n_subfeatures),
    }


def _grow_gbt(
    X: sp.csr_matrix,
    g: np.ndarray,
    h: np.ndarray,
    depth_left: int,
    min_leaf: int,
    lam: float,
    gamma: float,
    shrinkage: float,
) -> dict:
    """Regression node maximizing the second-order gain
    0.5*(GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma."""
    G = g.sum()
    H = h.sum()
    leaf = {"value": [float(-G / (H + lam) * shrinkage) if H + lam > 0 else 0.0]}
    n = X.shape[0]
    if depth_left == 0 or n < 2 * min_leaf:
        return leaf

    stats = np.column_stack([np.ones(n), g, h])
    Xc = X.tocsc()
    cand_col, cand_thr, left, totals = _candidate_splits(Xc, stats)
    if len(cand_col) == 0:
        return leaf
    nl, GL, HL = left[:, 0], left[:, 1], left[:, 2]
    nr, GR, HR = totals[0] - nl, totals[1] - GL, totals[2] - HL
    denom_l = np.maximum(HL + lam, 1e-12)
    denom_r = np.maximum(HR + lam, 1e-12)
    gain = 0.5 * (GL * GL / denom_l + GR * GR / denom_r - G * G / max(H + lam, 1e-12)) - gamma
    valid = (nl >= min_leaf) & (nr >= min_leaf)
    picked = _pick_best(gain, valid)
    if picked is None or picked[1] <= 0.0:
        return leaf
    best = picked[0]
    col, thr = int(cand_col[best]), float(cand_thr[best])
    mask = _column_values(Xc, col, n) <= thr
    return {
        "feature": col,
        "threshold": thr,
        "left": _grow_gbt(X[mask], g[mask], h[mask], depth_left - 1, min_leaf, lam, gamma, shrinkage),
        "right": _grow_gbt(X[~mask], g[~mask], h[~mask], depth_left - 1, min_leaf, lam, gamma, shrinkage),
    }


def _tree_apply(node: dict, Xc: sp.csc_matrix) -> np.ndarray:
    """Route every row of Xc to its leaf; returns (n, len(leaf value))."""
    n = Xc.shape[0]
    width = None
    probe = node
    while "value" not in probe:
        probe = probe["left"]
    width = len(probe["value"])
    out = np.empty((n, width))

    def walk(nd: dict, rows: np.ndarray) -> None:
        if len(rows) == 0:
            return
        if "value" in nd:
            out[rows] = nd["value"]
            return
        vals = _column_values(Xc, nd["feature"], n)[rows]
        mask = vals <= nd["threshold"]
        walk(nd["left"], rows[mask])
        walk(nd["right"], rows[~mask])

    walk(node, np.arange(n))
    return out


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# classifier interface


class ProbabilisticClassifier:
    """Fit/predict interface shared by all learner kinds.

    Subclasses implement `_fit(X, y, n_classes)` and `_proba(X)` on CSR
    matrices with y already mapped to contiguous internal class ids.
    """

    kind = "abstract"

    def __init__(self, config: LearnerConfig):
        self.config = config
        self.classes_: tuple[int, ...] = ()
        self.n_features_: int = 0

    def fit(self, data: FeatureMatrix) -> "ProbabilisticClassifier":
        if len(data) == 0:
            raise ValidationError("cannot fit on an empty matrix")
        X = data.to_csr()
        if not np.isfinite(X.data).all():
            raise ValidationError("non-finite feature values")
        y_raw = np.asarray(data.labels)
        self.classes_ = tuple(int(c) for c in np.unique(y_raw))
        if len(self.classes_) < 2:
            raise ValidationError("training data contains a single class")
        self.n_features_ = X.shape[1]
        lookup = {c: i for i, c in enumerate(self.classes_)}
        y = np.array([lookup[int(c)] for c in y_raw])
        self._fit(X, y, len(self.classes_))
        return self

    def _fit(self, X: sp.csr_matrix, y: np.ndarray, n_classes: int) -> None:
        raise NotImplementedError

    def _proba(self, X: sp.csr_matrix) -> np.ndarray:
        raise NotImplementedError

    def predict_proba_batch(self, rows: Sequence[SparseVector]) -> list[np.ndarray]:
        if len(rows) == 0:
            return []
        for r in rows:
            if r.dim != self.n_features_:
                raise ValidationError(f"row dim {r.dim} != training dim {self.n_features_}")
        return list(self._proba(rows_to_csr(rows, self.n_features_)))

    def predict_proba(self, row: SparseVector) -> np.ndarray:
        return self.predict_proba_batch([row])[0]

    def predict_batch(self, rows: Sequence[SparseVector]) -> list[int]:
        return [self.classes_[int(np.argmax(p))] for p in self.predict_proba_batch(rows)]

    def predict(self, row: SparseVector) -> int:
        return self.predict_batch([row])[0]

    # serialization ---------------------------------------------------------

    def _params(self) -> dict:
        raise NotImplementedError

    def _restore(self, params: dict) -> None:
        raise NotImplementedError

    def to_state(self) -> dict:
        return {
            "format": "offcat-model",
            "version": 1,
            "kind": self.kind,
            "config": asdict(self.config),
            "classes": list(self.classes_),
            "n_features": self.n_features_,
            "params": self._params(),
        }

    @staticmethod
    def from_state(state: dict) -> "ProbabilisticClassifier":
        if state.get("format") != "offcat-model":
            raise ValidationError("not a model artifact")
        model = _make(LearnerConfig(**state["config"]))
        model.classes_ = tuple(int(c) for c in state["classes"])
        model.n_features_ = int(state["n_features"])
        model._restore(state["params"])
        return model


class MajorityClassifier(ProbabilisticClassifier):
    """Constant distribution equal to the training class priors."""

    kind = "majority"

    def _fit(self, X, y, n_classes):
        counts = np.bincount(y, minlength=n_classes).astype(np.float64)
        self.priors_ = counts / counts.sum()

    def _proba(self, X):
        return np.tile(self.priors_, (X.shape[0], 1))

    def _params(self):
        return {"priors": self.priors_.tolist()}

    def _restore(self, params):
        self.priors_ = np.array(params["priors"])


class NaiveBayesClassifier(ProbabilisticClassifier):
    """Multinomial Naive Bayes with additive smoothing."""

    kind = "nb"

    def _fit(self, X, y, n_classes):
        alpha = self.config.alpha
        counts = np.zeros((n_classes, X.shape[1]))
        for k in range(n_classes):
            rows = X[y == k]
            counts[k] = np.asarray(rows.sum(axis=0)).ravel()
        totals = counts.sum(axis=1, keepdims=True)
        self.feature_log_prob_ = np.log(counts + alpha) - np.log(totals + alpha * X.shape[1])
        class_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
        self.class_log_prior_ = np.log(class_counts / class_counts.sum())

    def _proba(self, X):
        scores = X @ self.feature_log_prob_.T + self.class_log_prior_
        return _softmax(scores)

    def _params(self):
        return {
            "class_log_prior": self.class_log_prior_.tolist(),
            "feature_log_prob": self.feature_log_prob_.tolist(),
        }

    def _restore(self, params):
        self.class_log_prior_ = np.array(params["class_log_prior"])
        self.feature_log_prob_ = np.array(params["feature_log_prob"])


class LogisticRegressionClassifier(ProbabilisticClassifier):
    """Softmax regression trained by full-batch gradient descent.

    The step size is rescaled by the largest squared row norm so the same
    nominal learning rate is stable on unnormalized inputs.
    """

    kind = "logreg"

    @staticmethod
    def loss_and_grad(
        X: sp.csr_matrix, y_onehot: np.ndarray, W: np.ndarray, b: np.ndarray, l2: float
    ) -> tuple[float, np.ndarray, np.ndarray]:
        """Mean cross-entropy + 0.5*l2*||W||^2 (bias unregularized), with
        analytic gradients; single source for training and gradient checks."""
        n = X.shape[0]
        scores = X @ W + b
        probs = _softmax(scores)
        eps = 1e-15
        data_loss = -np.sum(y_onehot * np.log(probs + eps)) / n
        loss = data_loss + 0.5 * l2 * float((W * W).sum())
        delta = (probs - y_onehot) / n
        grad_w = (X.T @ delta) + l2 * W
        grad_b = delta.sum(axis=0)
        return float(loss), grad_w, grad_b

    def _fit(self, X, y, n_classes):
        n = X.shape[0]
        y_onehot = np.zeros((n, n_classes))
        y_onehot[np.arange(n), y] = 1.0
        W = np.zeros((X.shape[1], n_classes))
        b = np.zeros(n_classes)
        sq_norms = np.asarray(X.multiply(X).sum(axis=1)).ravel()
        step = self.config.learning_rate / max(1.0, 0.5 * float(sq_norms.max(initial=0.0)))
        for _ in range(self.config.epochs):
            _, gw, gb = self.loss_and_grad(X, y_onehot, W, b, self.config.l2)
            W -= step * gw
            b -= step * gb
        self.W_ = W
        self.b_ = b

    def _proba(self, X):
        return _softmax(X @ self.W_ + self.b_)

    def _params(self):
        return {"W": self.W_.tolist(), "b": self.b_.tolist()}

    def _restore(self, params):
        self.W_ = np.array(params["W"])
        self.b_ = np.array(params["b"])


def _platt_fit(scores: np.ndarray, targets01: np.ndarray) -> tuple[float, float]:
    """Sigmoid calibration p = s(a*score + b) by Newton on the log loss,
    with the usual smoothed targets to keep the fit bounded on separable
    score sets."""
    n_pos = float(targets01.sum())
    n_neg = float(len(targets01) - n_pos)
    t = np.where(targets01 > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a, b = 0.0, log((n_neg + 1.0) / (n_pos + 1.0))
    for _ in range(100):
        z = a * scores + b
        p = 1.0 / (1.0 + np.exp(-z))
        d = p - t
        grad_a = float(np.dot(d, scores))
        grad_b = float(d.sum())
        w = p * (1.0 - p)
        haa = float(np.dot(w, scores * scores)) + 1e-12
        hab = float(np.dot(w, scores))
        hbb = float(w.sum()) + 1e-12
        det = haa * hbb - hab * hab
        if abs(det) < 1e-24:
            break
        da = (hbb * grad_a - hab * grad_b) / det
        db = (haa * grad_b - hab * grad_a) / det
        a -= da
        b -= db
        if max(abs(da), abs(db)) < 1e-10:
            break
    return a, b


class LinearSVMClassifier(ProbabilisticClassifier):
    """One-vs-rest linear SVM via hinge-loss subgradient descent.

    Probabilities come from per-class sigmoid calibration fitted on the
    training decision scores, normalized across classes; with
    calibrate=False a softmax over raw scores is used instead.
    """

    kind = "linsvm"

    def _fit(self, X, y, n_classes):
        n, v = X.shape
        lam = 1.0 / (self.config.margin_c * n)
        sq_norms = np.asarray(X.multiply(X).sum(axis=1)).ravel()
        step = self.config.learning_rate / max(1.0, 0.5 * float(sq_norms.max(initial=0.0)))
        W = np.zeros((v, n_classes))
        b = np.zeros(n_classes)
        signs = np.where(np.arange(n_classes)[None, :] == y[:, None], 1.0, -1.0)
        for _ in range(self.config.epochs):
            margins = signs * (X @ W + b)
            viol = (margins < 1.0).astype(np.float64) * signs
            grad_w = lam * W - (X.T @ viol) / n
            grad_b = -viol.sum(axis=0) / n
            W -= step * grad_w
            b -= step * grad_b
        self.W_ = W
        self.b_ = b
        if self.config.calibrate:
            scores = X @ W + b
            self.platt_ = [
                _platt_fit(scores[:, k], (y == k).astype(np.float64)) for k in range(n_classes)
            ]
        else:
            self.platt_ = None

    def _proba(self, X):
        scores = X @ self.W_ + self.b_
        if self.platt_ is None:
            return _softmax(scores)
        probs = np.empty_like(scores)
        for k, (a, b) in enumerate(self.platt_):
            probs[:, k] = 1.0 / (1.0 + np.exp(-(a * scores[:, k] + b)))
        total = probs.sum(axis=1, keepdims=True)
        uniform = np.full_like(probs, 1.0 / probs.shape[1])
        return np.where(total > 0, probs / np.maximum(total, 1e-300), uniform)

    def _params(self):
        return {
            "W": self.W_.tolist(),
            "b": self.b_.tolist(),
            "platt": [list(p) for p in self.platt_] if self.platt_ is not None else None,
        }

    def _restore(self, params):
        self.W_ = np.array(params["W"])
        self.b_ = np.array(params["b"])
        platt = params["platt"]
        self.platt_ = [tuple(p) for p in platt] if platt is not None else None


class DecisionTreeClassifier(ProbabilisticClassifier):
    """Single CART tree; predict_proba is the leaf class distribution."""

    kind = "tree"

    def _fit(self, X, y, n_classes):
        w = np.ones(X.shape[0])
        self.root_ = _grow_gini(
            X, y, w, n_classes, self.config.depth, self.config.min_samples_leaf, None, None
        )

    def _proba(self, X):
        return _tree_apply(self.root_, X.tocsc())

    def _params(self):
        return {"root": self.root_}

    def _restore(self, params):
        self.root_ = params["root"]


class _BootstrapForest(ProbabilisticClassifier):
    """Shared bootstrap-aggregation core for random forest and bagging."""

    per_split_subspace = False

    def _n_subfeatures(self, v: int) -> int | None:
        frac = self.config.feature_fraction
        if frac is None:
            if self.per_split_subspace:
                return max(1, int(round(sqrt(v))))
            return None
        return max(1, int(round(frac * v)))

    def _fit(self, X, y, n_classes):
        n = X.shape[0]
        n_draw = max(1, int(round(self.config.subsample * n)))
        n_sub = self._n_subfeatures(X.shape[1])
        seeds = np.random.SeedSequence(self.config.seed).spawn(self.config.estimators)
        self.trees_ = []
        for ss in seeds:
            rng = np.random.default_rng(ss)
            picked = rng.integers(0, n, size=n_draw)
            self.trees_.append(
                _grow_gini(
                    X[picked],
                    y[picked],
                    np.ones(n_draw),
                    n_classes,
                    self.config.depth,
                    self.config.min_samples_leaf,
                    rng,
                    n_sub,
                )
            )

    def _proba(self, X):
        Xc = X.tocsc()
        acc = np.zeros((X.shape[0], len(self.classes_)))
        for tree in self.trees_:
            acc += _tree_apply(tree, Xc)
        return acc / len(self.trees_)

    def _params(self):
        return {"trees": self.trees_}

    def _restore(self, params):
        self.trees_ = params["trees"]


class RandomForestClassifier(_BootstrapForest):
    kind = "random_forest"
    per_split_subspace = True


class BaggingClassifier(_BootstrapForest):
    kind = "bagging"
    per_split_subspace = False


class AdaBoostClassifier(ProbabilisticClassifier):
    """Multiclass AdaBoost with the SAMME weight update over shallow trees.

    A round's tree is kept only while its weighted error stays below the
    random-guess bound (K-1)/K; rounds stop early once a tree is perfect.
    predict_proba is the alpha-weighted vote mass per class, normalized.
    """

    kind = "adaboost"

    def _fit(self, X, y, n_classes):
        n = X.shape[0]
        counts = np.bincount(y, minlength=n_classes).astype(np.float64)
        self.priors_ = counts / counts.sum()
        w = np.full(n, 1.0 / n)
        self.trees_: list[dict] = []
        self.alphas_: list[float] = []
        self.errors_: list[float] = []
        Xc = X.tocsc()
        bound = (n_classes - 1) / n_classes
        for _ in range(self.config.estimators):
            tree = _grow_gini(X, y, w, n_classes, self.config.depth, self.config.min_samples_leaf, None, None)
            pred = np.argmax(_tree_apply(tree, Xc), axis=1)
            miss = pred != y
            err = float(w[miss].sum())
            if err >= bound:
                break
            # SAMME round weight; the log(K-1) term vanishes for K = 2
            alpha = log((1.0 - err) / max(err, 1e-300)) + log(n_classes - 1.0)
            self.trees_.append(tree)
            self.alphas_.append(alpha)
            self.errors_.append(err)
            if err <= 0.0:
                break
            w = w * np.exp(alpha * miss)
            w = w / w.sum()

    def _proba(self, X):
        n = X.shape[0]
        if not self.trees_:
            return np.tile(self.priors_, (n, 1))
        Xc = X.tocsc()
        votes = np.zeros((n, len(self.classes_)))
        for tree, alpha in zip(self.trees_, self.alphas_):
            pred = np.argmax(_tree_apply(tree, Xc), axis=1)
            votes[np.arange(n), pred] += alpha
        totals = votes.sum(axis=1, keepdims=True)
        uniform = np.full_like(votes, 1.0 / votes.shape[1])
        return np.where(totals > 0, votes / np.maximum(totals, 1e-300), uniform)

    def _params(self):
        return {
            "trees": self.trees_,
            "alphas": self.alphas_,
            "errors": self.errors_,
            "priors": self.priors_.tolist(),
        }

    def _restore(self, params):
        self.trees_ = params["trees"]
        self.alphas_ = list(params["alphas"])
        self.errors_ = list(params["errors"])
        self.priors_ = np.array(params["priors"])


class GradientBoostedTrees(ProbabilisticClassifier):
    """Stagewise regression trees on the logistic loss.

    Binary tasks boost a single score column (sigmoid link); multiclass
    boosts one tree per class and round on softmax gradients.  Leaf
    weights are -G/(H+lambda) with shrinkage folded in; `second_order`
    False fixes the hessian at 1 (classic first-order gradient boosting).
    With zero rounds the model predicts the training class priors.
    """

    kind = "gbt"

    def _fit(self, X, y, n_classes):
        n = X.shape[0]
        counts = np.bincount(y, minlength=n_classes).astype(np.float64)
        priors = counts / counts.sum()
        cfg = self.config
        Xc = X.tocsc()
        if n_classes == 2:
            self.base_ = [float(log(priors[1] / priors[0]))]
            scores = np.full(n, self.base_[0])
            target = (y == 1).astype(np.float64)
            self.rounds_: list[list[dict]] = []
            for _ in range(cfg.estimators):
                p = 1.0 / (1.0 + np.exp(-scores))
                g = p - target
                h = p * (1.0 - p) if cfg.second_order else np.ones(n)
                tree = _grow_gbt(
                    X, g, h, cfg.depth, cfg.min_samples_leaf, cfg.leaf_l2, cfg.gain_threshold, cfg.shrinkage
                )
                self.rounds_.append([tree])
                scores += _tree_apply(tree, Xc)[:, 0]
        else:
            self.base_ = [float(log(p)) for p in priors]
            scores = np.tile(self.base_, (n, 1))
            onehot = np.zeros((n, n_classes))
            onehot[np.arange(n), y] = 1.0
            self.rounds_ = []
            for _ in range(cfg.estimators):
                p = _softmax(scores)
                round_trees = []
                for k in range(n_classes):
                    g = p[:, k] - onehot[:, k]
                    h = p[:, k] * (1.0 - p[:, k]) if cfg.second_order else np.ones(n)
                    tree = _grow_gbt(
                        X, g, h, cfg.depth, cfg.min_samples_leaf, cfg.leaf_l2, cfg.gain_threshold, cfg.shrinkage
                    )
                    round_trees.append(tree)
                self.rounds_.append(round_trees)
                for k, tree in enumerate(round_trees):
                    scores[:, k] += _tree_apply(tree, Xc)[:, 0]

    def _raw_scores(self, Xc: sp.csc_matrix) -> np.ndarray:
        n = Xc.shape[0]
        if len(self.base_) == 1:
            scores = np.full(n, self.base_[0])
            for (tree,) in self.rounds_:
                scores += _tree_apply(tree, Xc)[:, 0]
            return scores
        scores = np.tile(self.base_, (n, 1))
        for round_trees in self.rounds_:
            for k, tree in enumerate(round_trees):
                scores[:, k] += _tree_apply(tree, Xc)[:, 0]
        return scores

    def _proba(self, X):
        scores = self._raw_scores(X.tocsc())
        if scores.ndim == 1:
            p1 = 1.0 / (1.0 + np.exp(-scores))
            return np.column_stack([1.0 - p1, p1])
        return _softmax(scores)

    def _params(self):
        return {"base": self.base_, "rounds": self.rounds_}

    def _restore(self, params):
        self.base_ = list(params["base"])
        self.rounds_ = params["rounds"]


_REGISTRY = {
    cls.kind: cls
    for cls in (
        MajorityClassifier,
        NaiveBayesClassifier,
        LogisticRegressionClassifier,
        LinearSVMClassifier,
        DecisionTreeClassifier,
        RandomForestClassifier,
        BaggingClassifier,
        AdaBoostClassifier,
        GradientBoostedTrees,
    )
}


def _make(config: LearnerConfig) -> ProbabilisticClassifier:
    return _REGISTRY[config.kind](config)


def fit(config: LearnerConfig, data: FeatureMatrix) -> ProbabilisticClassifier:
    """Construct and fit the learner described by `config`."""
    return _make(config).fit(data)


def predict_proba_batch(model: ProbabilisticClassifier, rows: Sequence[SparseVector]) -> list[np.ndarray]:
    return model.predict_proba_batch(rows)


def save_model(model: ProbabilisticClassifier, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_state()), encoding="utf-8")


def load_model(path: str | Path) -> ProbabilisticClassifier:
    return ProbabilisticClassifier.from_state(json.loads(Path(path).read_text(encoding="utf-8")))

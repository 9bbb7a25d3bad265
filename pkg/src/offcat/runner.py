"""Config-driven experiment orchestration.

An experiment = data + split + feature settings + a model tree, where the
tree is either a single learner or a (possibly nested) voting ensemble and
every node carries its own data-enhancement recipe.  Enhancement applies
to the training split only; the dev split is vectorized with the training
vocabulary and never resampled.

All randomness derives from the experiment seed through a fixed-order
seed stream, so a rerun with the same config and seed is byte-identical,
and grid runs are invariant to execution order and parallelism.
"""

from __future__ import annotations

import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from hashlib import sha256
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from . import learners
from .augment import AugmentConfig, EmbeddingModel, generate_balanced, train_embeddings
from .corpus import (
    TASK_LABELS,
    LABEL_TO_CODE,
    Dataset,
    SplitSpec,
    Task,
    load_olid,
    load_olid_texts,
    preprocess,
    save_olid,
    stratified_split,
)
from .ensemble import Ensemble, PipelineMember, VoteMode
from .errors import ConfigError, DataError, ValidationError
from .evaluate import ClassReport, confusion, confusion_to_csv, render_report, report, report_to_csv
from .features import (
    NGramConfig,
    Representation,
    Vocabulary,
    fit_vocabulary,
    load_vocabulary,
    save_vocabulary,
    tfidf_transform,
    vectorize,
    vocabulary_fingerprint,
)
from .learners import LearnerConfig, ProbabilisticClassifier
from .presets import LEARNER_PRESETS
from .resample import ResamplePlan, SampleMethod, apply_plan, random_oversample_text

TEXT_METHODS = ("synthetic", "c1", "c2", "c3", "c4", "per_class")
FEATURE_METHODS = ("ros", "rus", "smote", "nearmiss1", "nearmiss2", "nearmiss3")
_METHOD_ALIASES = {"org": "none", "balanced_synth": "synthetic"}

# the four task-C balanced-training recipes: per minority class, duplicate
# ("ros") or paraphrase ("synthetic") up to the majority count
C_RECIPES: dict[str, dict[str, str]] = {
    "c1": {"GROUP": "ros", "OTHER": "ros"},
    "c2": {"GROUP": "synthetic", "OTHER": "synthetic"},
    "c3": {"GROUP": "ros", "OTHER": "synthetic"},
    "c4": {"GROUP": "synthetic", "OTHER": "ros"},
}


@dataclass(frozen=True)
class EnhancementSpec:
    method: str = "none"
    k_neighbors: int = 5
    n_ref: int = 3
    per_class: tuple[tuple[str, str], ...] = ()  # (label value, "ros"|"synthetic")


@dataclass(frozen=True)
class FeatureSpec:
    ngrams: NGramConfig
    representation: Representation
    resample_stage: str = "final"  # "final" or "counts" (resample, then reweight)


@dataclass(frozen=True)
class LearnerNode:
    learner: LearnerConfig
    enhancement: EnhancementSpec
    features: FeatureSpec
    name: str


@dataclass(frozen=True)
class EnsembleNode:
    mode: VoteMode
    children: tuple
    weights: tuple[float, ...] | None
    name: str


@dataclass(frozen=True)
class ExperimentConfig:
    task: Task
    data: str
    seed: int
    name: str
    split: SplitSpec
    enhancement: EnhancementSpec  # experiment-level default
    augment: AugmentConfig
    embedding_corpus: str  # "train" or "file"
    model: LearnerNode | EnsembleNode
    out: str | None
    fingerprint: str
    normalized: dict


@dataclass(frozen=True)
class GridSpec:
    ngrams: tuple[tuple[int, int], ...]
    representations: tuple[str, ...]
    enhancements: tuple[str, ...]
    learners: tuple[tuple[tuple[str, object], ...], ...]  # frozen item views of learner tables

    def __post_init__(self) -> None:
        for axis in ("ngrams", "representations", "enhancements", "learners"):
            if len(getattr(self, axis)) == 0:
                raise ConfigError(f"grid axis {axis} is empty")

    def size(self) -> int:
        return (
            len(self.ngrams) * len(self.representations) * len(self.enhancements) * len(self.learners)
        )


@dataclass
class RunResult:
    fingerprint: str
    name: str
    macro_f1: float
    report: ClassReport
    out_dir: str
    wall_time: float
    reused: bool = False


# ---------------------------------------------------------------------------
# config parsing


def _require_keys(table: dict, allowed: set[str], where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(sorted(unknown))}")


def _parse_enhancement(table: dict, task: Task, where: str) -> EnhancementSpec:
    _require_keys(table, {"method", "k_neighbors", "n_ref", "per_class"}, where)
    method = str(table.get("method", "none")).lower()
    method = _METHOD_ALIASES.get(method, method)
    per_class: tuple[tuple[str, str], ...] = ()
    if "per_class" in table:
        if method not in ("none", "per_class"):
            raise ConfigError(f"{where}: per_class table conflicts with method={method}")
        method = "per_class"
        items = table["per_class"]
        for value, action in items.items():
            if value not in TASK_LABELS[task]:
                raise ConfigError(f"{where}: unknown class {value!r} for task {task.value}")
            if action not in ("ros", "synthetic"):
                raise ConfigError(f"{where}: per-class action must be ros|synthetic, got {action!r}")
        per_class = tuple(sorted(items.items()))
    valid = ("none",) + FEATURE_METHODS + TEXT_METHODS
    if method not in valid:
        raise ConfigError(f"{where}: unknown enhancement method {method!r}")
    if method in C_RECIPES and task is not Task.C:
        raise ConfigError(f"{where}: {method} is a task-C recipe, task is {task.value}")
    return EnhancementSpec(
        method=method,
        k_neighbors=int(table.get("k_neighbors", 5)),
        n_ref=int(table.get("n_ref", 3)),
        per_class=per_class,
    )


def _parse_features(table: dict, where: str) -> FeatureSpec:
    _require_keys(table, {"min_n", "max_n", "min_df", "representation", "resample_stage"}, where)
    rep_name = str(table.get("representation", "tfidf")).lower()
    try:
        rep = Representation(rep_name)
    except ValueError:
        raise ConfigError(f"{where}: unknown representation {rep_name!r}") from None
    stage = str(table.get("resample_stage", "final"))
    if stage not in ("final", "counts"):
        raise ConfigError(f"{where}: resample_stage must be final|counts, got {stage!r}")
    if stage == "counts" and rep is not Representation.TFIDF:
        raise ConfigError(f"{where}: resample_stage=counts requires representation=tfidf")
    try:
        ngrams = NGramConfig(
            min_n=int(table.get("min_n", 1)),
            max_n=int(table.get("max_n", table.get("min_n", 1))),
            min_df=int(table.get("min_df", 1)),
        )
    except ValidationError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return FeatureSpec(ngrams=ngrams, representation=rep, resample_stage=stage)


_LEARNER_KEYS = {
    "kind", "preset", "seed", "alpha", "l2", "learning_rate", "epochs", "margin_c",
    "calibrate", "max_depth", "min_samples_leaf", "n_estimators", "subsample",
    "feature_fraction", "shrinkage", "leaf_l2", "gain_threshold", "second_order",
}


def _parse_learner(table: dict, where: str) -> LearnerConfig:
    _require_keys(table, _LEARNER_KEYS, where)
    merged: dict = {}
    if "preset" in table:
        preset = table["preset"]
        if preset not in LEARNER_PRESETS:
            raise ConfigError(f"{where}: unknown learner preset {preset!r}")
        merged.update(LEARNER_PRESETS[preset])
    merged.update({k: v for k, v in table.items() if k != "preset"})
    if "kind" not in merged:
        raise ConfigError(f"{where}: learner needs a kind")
    try:
        return LearnerConfig(**merged)
    except (TypeError, ValidationError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_model(
    table: dict, task: Task, default_enh: EnhancementSpec, default_feat: FeatureSpec, where: str
) -> LearnerNode | EnsembleNode:
    if "mode" in table:
        _require_keys(table, {"mode", "members", "weights", "name"}, where)
        try:
            mode = VoteMode(str(table["mode"]).lower())
        except ValueError:
            raise ConfigError(f"{where}: unknown ensemble mode {table['mode']!r}") from None
        members = table.get("members", [])
        if not members:
            raise ConfigError(f"{where}: ensemble has no members")
        children = tuple(
            _parse_model(m, task, default_enh, default_feat, f"{where}.members[{i}]")
            for i, m in enumerate(members)
        )
        weights = table.get("weights")
        if weights is not None:
            weights = tuple(float(w) for w in weights)
            if len(weights) != len(children):
                raise ConfigError(f"{where}: weights length != member count")
            if any(w < 0 for w in weights):
                raise ConfigError(f"{where}: weights must be nonnegative")
        name = str(table.get("name", f"{mode.value}_vote"))
        return EnsembleNode(mode=mode, children=children, weights=weights, name=name)

    node_table = dict(table)
    enh = default_enh
    feat = default_feat
    if "enhancement" in node_table:
        enh = _parse_enhancement(node_table.pop("enhancement"), task, f"{where}.enhancement")
    if "features" in node_table:
        feat = _parse_features(node_table.pop("features"), f"{where}.features")
    name = str(node_table.pop("name", node_table.get("kind", "learner")))
    learner = _parse_learner(node_table, where)
    return LearnerNode(learner=learner, enhancement=enh, features=feat, name=name)


def _node_to_dict(node: LearnerNode | EnsembleNode) -> dict:
    if isinstance(node, EnsembleNode):
        return {
            "mode": node.mode.value,
            "weights": list(node.weights) if node.weights is not None else None,
            "name": node.name,
            "members": [_node_to_dict(c) for c in node.children],
        }
    cfg = node.learner
    return {
        "name": node.name,
        "learner": {
            "kind": cfg.kind,
            "alpha": cfg.alpha,
            "l2": cfg.l2,
            "learning_rate": cfg.learning_rate,
            "epochs": cfg.epochs,
            "margin_c": cfg.margin_c,
            "calibrate": cfg.calibrate,
            "max_depth": cfg.depth,
            "min_samples_leaf": cfg.min_samples_leaf,
            "n_estimators": cfg.estimators,
            "subsample": cfg.subsample,
            "feature_fraction": cfg.feature_fraction,
            "shrinkage": cfg.shrinkage,
            "leaf_l2": cfg.leaf_l2,
            "gain_threshold": cfg.gain_threshold,
            "second_order": cfg.second_order,
        },
        "enhancement": {
            "method": node.enhancement.method,
            "k_neighbors": node.enhancement.k_neighbors,
            "n_ref": node.enhancement.n_ref,
            "per_class": [list(p) for p in node.enhancement.per_class],
        },
        "features": {
            "min_n": node.features.ngrams.min_n,
            "max_n": node.features.ngrams.max_n,
            "min_df": node.features.ngrams.min_df,
            "representation": node.features.representation.value,
            "resample_stage": node.features.resample_stage,
        },
    }


_TOP_KEYS = {
    "task", "data", "seed", "name", "out", "split", "features", "enhancement",
    "augment", "model", "grid",
}


def parse_experiment(raw: dict) -> ExperimentConfig:
    """Validate a raw config mapping and derive its fingerprint.

    The fingerprint hashes the fully normalized config (defaults filled
    in) plus the seed, so sparse and explicit spellings of the same
    experiment collide, and different seeds do not.
    """
    _require_keys(raw, _TOP_KEYS, "config")
    try:
        task = Task(str(raw.get("task", "")).upper())
    except ValueError:
        raise ConfigError(f"task must be B or C, got {raw.get('task')!r}") from None
    if "data" not in raw:
        raise ConfigError("config needs a data path")
    seed = int(raw.get("seed", 0))

    split_table = raw.get("split", {})
    _require_keys(split_table, {"train_fraction", "stratified"}, "split")
    try:
        split = SplitSpec(
            train_fraction=float(split_table.get("train_fraction", 0.8)),
            seed=seed,
            stratified=bool(split_table.get("stratified", True)),
        )
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None

    features = _parse_features(raw.get("features", {}), "features")
    enhancement = _parse_enhancement(raw.get("enhancement", {}), task, "enhancement")

    aug_table = raw.get("augment", {})
    _require_keys(
        aug_table,
        {"replace_prob", "top_k", "dim", "window", "epochs", "negative", "min_count", "learning_rate", "corpus"},
        "augment",
    )
    embedding_corpus = str(aug_table.get("corpus", "train"))
    if embedding_corpus not in ("train", "file"):
        raise ConfigError(f"augment.corpus must be train|file, got {embedding_corpus!r}")
    try:
        augment = AugmentConfig(
            replace_prob=float(aug_table.get("replace_prob", 0.9)),
            top_k=int(aug_table.get("top_k", 5)),
            dim=int(aug_table.get("dim", 100)),
            window=int(aug_table.get("window", 5)),
            epochs=int(aug_table.get("epochs", 5)),
            negative=int(aug_table.get("negative", 5)),
            min_count=int(aug_table.get("min_count", 1)),
            learning_rate=float(aug_table.get("learning_rate", 0.025)),
            seed=0,  # reseeded from the experiment seed stream at run time
        )
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None

    if "model" not in raw:
        raise ConfigError("config needs a model table")
    model = _parse_model(raw["model"], task, enhancement, features, "model")

    name = str(raw.get("name", ""))
    normalized = {
        "task": task.value,
        "seed": seed,
        "split": {"train_fraction": split.train_fraction, "stratified": split.stratified},
        "augment": {
            "replace_prob": augment.replace_prob,
            "top_k": augment.top_k,
            "dim": augment.dim,
            "window": augment.window,
            "epochs": augment.epochs,
            "negative": augment.negative,
            "min_count": augment.min_count,
            "learning_rate": augment.learning_rate,
            "corpus": embedding_corpus,
        },
        "model": _node_to_dict(model),
    }
    fingerprint = sha256(json.dumps(normalized, sort_keys=True).encode()).hexdigest()[:16]
    return ExperimentConfig(
        task=task,
        data=str(raw["data"]),
        seed=seed,
        name=name or f"experiment_{fingerprint[:8]}",
        split=split,
        enhancement=enhancement,
        augment=augment,
        embedding_corpus=embedding_corpus,
        model=model,
        out=str(raw["out"]) if "out" in raw else None,
        fingerprint=fingerprint,
        normalized=normalized,
    )


def load_config_file(path: str | Path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# training


def _seed_stream(seed: int) -> Iterator[int]:
    state = np.random.SeedSequence(seed).generate_state(1024, np.uint64)
    return iter(int(x) for x in state)


def build_enhanced_dataset(
    dataset: Dataset,
    spec: EnhancementSpec,
    augment_config: AugmentConfig,
    embedding: Callable[[], EmbeddingModel] | None,
    seed: int,
) -> Dataset:
    """Apply a text-level enhancement recipe to a training dataset.

    Feature-space methods (ros/rus/smote/nearmiss*) leave the text
    untouched here and run after vectorization.  Per-class recipes raise
    each listed class to the majority count, paraphrasing first and
    duplicating second.
    """
    method = spec.method
    if method in ("none",) + FEATURE_METHODS:
        return dataset
    if method == "synthetic":
        return generate_balanced(dataset, embedding(), replace(augment_config, seed=seed))
    if method in C_RECIPES or method == "per_class":
        recipe = C_RECIPES.get(method) or dict(spec.per_class)
        counts = dataset.class_counts
        majority = max(counts.values())
        for value in recipe:
            if counts.get(value, 0) == 0:
                raise ValidationError(f"enhancement recipe names empty class {value}")
        synth = {v for v, action in recipe.items() if action == "synthetic"}
        ros = {v for v, action in recipe.items() if action == "ros"}
        out = dataset
        if synth:
            out = generate_balanced(out, embedding(), replace(augment_config, seed=seed), only=synth)
        if ros:
            out = random_oversample_text(out, seed + 1, targets={v: majority for v in ros})
        return out
    raise ConfigError(f"unknown enhancement method {method!r}")


def _resample_plan(spec: EnhancementSpec, seed: int) -> ResamplePlan:
    return ResamplePlan(
        method=SampleMethod(spec.method),
        k_neighbors=spec.k_neighbors,
        n_ref=spec.n_ref,
        seed=seed,
    )


def _train_leaf(
    node: LearnerNode,
    train: Dataset,
    augment_config: AugmentConfig,
    embedding: Callable[[], EmbeddingModel],
    seeds: Iterator[int],
) -> PipelineMember:
    enh_seed = next(seeds)
    learner_seed = next(seeds)
    enhanced = build_enhanced_dataset(train, node.enhancement, augment_config, embedding, enh_seed)
    docs = enhanced.documents
    labels = enhanced.labels
    vocab = fit_vocabulary(docs, node.features.ngrams)
    rep = node.features.representation
    feature_level = node.enhancement.method in FEATURE_METHODS
    if feature_level and node.features.resample_stage == "counts":
        matrix = vectorize(docs, labels, vocab, Representation.COUNTS)
        matrix = apply_plan(matrix, _resample_plan(node.enhancement, enh_seed))
        matrix = tfidf_transform(matrix, vocab)
    else:
        matrix = vectorize(docs, labels, vocab, rep)
        if feature_level:
            matrix = apply_plan(matrix, _resample_plan(node.enhancement, enh_seed))
    model = learners.fit(replace(node.learner, seed=learner_seed), matrix)
    return PipelineMember(
        model=model,
        vocabulary=vocab,
        representation=rep,
        name=node.name,
        provenance=node.enhancement.method,
    )


def train_model(
    node: LearnerNode | EnsembleNode,
    train: Dataset,
    augment_config: AugmentConfig,
    embedding: Callable[[], EmbeddingModel],
    seeds: Iterator[int],
) -> PipelineMember | Ensemble:
    """Fit a model tree; children are trained in order, each drawing its
    own seeds from the stream."""
    if isinstance(node, LearnerNode):
        return _train_leaf(node, train, augment_config, embedding, seeds)
    members = [train_model(c, train, augment_config, embedding, seeds) for c in node.children]
    return Ensemble(members=members, mode=node.mode, weights=list(node.weights) if node.weights else None)


def evaluate_model(model: PipelineMember | Ensemble, dataset: Dataset):
    """(ClassReport, ConfusionMatrix, predictions) of a model on labeled data."""
    docs = dataset.documents
    golds = list(dataset.labels)
    preds = model.predict_tokens_batch(docs) if docs else []
    n_classes = len(TASK_LABELS[dataset.task])
    matrix = confusion(golds, preds, n_classes)
    return report(matrix), matrix, preds


# ---------------------------------------------------------------------------
# artifacts


def save_artifact(model: PipelineMember | Ensemble, task: Task, out_dir: str | Path) -> None:
    """Self-describing artifact directory: manifest + per-member model/vocab."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    counter = itertools.count()

    def dump(node) -> dict:
        if isinstance(node, Ensemble):
            return {
                "type": "ensemble",
                "mode": node.mode.value,
                "weights": node.weights,
                "children": [dump(m) for m in node.members],
            }
        i = next(counter)
        model_file = f"m{i}.model.json"
        vocab_file = f"m{i}.vocab.tsv"
        save_vocabulary(node.vocabulary, out / vocab_file)
        fp = vocabulary_fingerprint(node.vocabulary)
        state = node.model.to_state()
        state["vocab_fingerprint"] = fp
        _write_atomic(out / model_file, json.dumps(state))
        return {
            "type": "member",
            "name": node.name,
            "provenance": node.provenance,
            "representation": node.representation.value,
            "model": model_file,
            "vocab": vocab_file,
            "vocab_fingerprint": fp,
        }

    manifest = {
        "format": "offcat-artifact",
        "version": 1,
        "task": task.value,
        "node": dump(model),
    }
    _write_atomic(out / "manifest.json", json.dumps(manifest, indent=2))


def load_artifact(path: str | Path) -> tuple[PipelineMember | Ensemble, Task]:
    """Load an artifact directory; verifies each member's vocabulary
    fingerprint and errors on mismatch."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no artifact manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != "offcat-artifact":
        raise DataError(f"{manifest_path}: not an artifact manifest")
    task = Task(manifest["task"])

    def build(entry: dict):
        if entry["type"] == "ensemble":
            return Ensemble(
                members=[build(c) for c in entry["children"]],
                mode=VoteMode(entry["mode"]),
                weights=entry["weights"],
            )
        vocab = load_vocabulary(root / entry["vocab"])
        actual = vocabulary_fingerprint(vocab)
        if actual != entry["vocab_fingerprint"]:
            raise ValidationError(
                f"vocabulary fingerprint mismatch for {entry['vocab']}: "
                f"{actual} != {entry['vocab_fingerprint']}"
            )
        state = json.loads((root / entry["model"]).read_text(encoding="utf-8"))
        if state.get("vocab_fingerprint") != actual:
            raise ValidationError(f"model {entry['model']} was fit on a different vocabulary")
        return PipelineMember(
            model=ProbabilisticClassifier.from_state(state),
            vocabulary=vocab,
            representation=Representation(entry["representation"]),
            name=entry.get("name", ""),
            provenance=entry.get("provenance", ""),
        )

    return build(manifest["node"]), task


# ---------------------------------------------------------------------------
# experiment execution


def _write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    tmp.replace(path)


def _write_eval_files(out: Path, prefix: str, rep: ClassReport, matrix, names) -> None:
    _write_atomic(out / f"{prefix}metrics.csv", report_to_csv(rep, names))
    _write_atomic(out / f"{prefix}report.txt", render_report(rep, names))
    _write_atomic(out / f"{prefix}confusion.csv", confusion_to_csv(matrix, names))
    _write_atomic(out / f"{prefix}confusion_norm.csv", confusion_to_csv(matrix, names, normalized=True))


def run_experiment(
    config: ExperimentConfig, out_dir: str | Path | None = None, test_path: str | Path | None = None
) -> RunResult:
    """Train per the config, evaluate on the dev split, persist everything.

    Data flow: the file is split once; every enhancement (text or feature
    level) sees only the training split, and the embedding corpus is the
    training split unless augment.corpus = "file".  The optional
    `test_path` is scored with the trained model and never touches
    fitting.
    """
    out = Path(out_dir if out_dir is not None else (config.out or f"runs/{config.fingerprint}"))
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    dataset = load_olid(config.data, config.task)
    train, dev = stratified_split(dataset, config.split)

    seeds = _seed_stream(config.seed)
    embed_seed = next(seeds)
    embedding_cache: list[EmbeddingModel] = []

    def embedding() -> EmbeddingModel:
        if not embedding_cache:
            if config.embedding_corpus == "file":
                corpus = load_olid_texts(config.data)
            else:
                corpus = train.documents
            embedding_cache.append(
                train_embeddings(corpus, replace(config.augment, seed=embed_seed))
            )
        return embedding_cache[0]

    model = train_model(config.model, train, config.augment, embedding, seeds)
    names = TASK_LABELS[config.task]
    rep, matrix, _ = evaluate_model(model, dev)
    _write_eval_files(out, "", rep, matrix, names)
    save_artifact(model, config.task, out / "model")

    test_macro = None
    if test_path is not None:
        test_ds = load_olid(test_path, config.task)
        test_rep, test_matrix, _ = evaluate_model(model, test_ds)
        _write_eval_files(out, "test_", test_rep, test_matrix, names)
        test_macro = test_rep.macro_f1

    wall = time.perf_counter() - started
    result = {
        "fingerprint": config.fingerprint,
        "name": config.name,
        "config": config.normalized,
        "data": config.data,
        "macro_f1": rep.macro_f1,
        "test_macro_f1": test_macro,
        "wall_time_s": wall,
        "model_dir": "model",
    }
    _write_atomic(out / "result.json", json.dumps(result, indent=2))
    return RunResult(
        fingerprint=config.fingerprint,
        name=config.name,
        macro_f1=rep.macro_f1,
        report=rep,
        out_dir=str(out),
        wall_time=wall,
    )


# ---------------------------------------------------------------------------
# grids


def parse_grid(raw: dict) -> GridSpec:
    table = raw.get("grid")
    if not table:
        raise ConfigError("grid config needs a [grid] table")
    _require_keys(table, {"ngrams", "representations", "enhancements", "learners"}, "grid")
    ngrams = tuple((int(p[0]), int(p[1])) for p in table.get("ngrams", [[1, 1]]))
    reps = tuple(str(r) for r in table.get("representations", ["tfidf"]))
    enhancements = tuple(str(e) for e in table.get("enhancements", ["none"]))
    learner_tables = []
    for entry in table.get("learners", []):
        if isinstance(entry, str):
            entry = {"kind": entry}
        learner_tables.append(tuple(sorted(entry.items())))
    return GridSpec(
        ngrams=ngrams,
        representations=reps,
        enhancements=enhancements,
        learners=tuple(learner_tables),
    )


def _grid_combo_config(base: dict, combo, run_seed: int) -> dict:
    (lo, hi), rep, enh, learner_items = combo
    learner = dict(learner_items)
    raw = {k: v for k, v in base.items() if k in ("task", "data", "split", "augment")}
    raw["features"] = dict(base.get("features", {}))
    raw["features"].update({"min_n": lo, "max_n": hi, "representation": rep})
    raw["enhancement"] = dict(base.get("enhancement", {}))
    raw["enhancement"]["method"] = enh
    raw["model"] = learner
    raw["seed"] = run_seed
    raw["name"] = f"{learner.get('kind', learner.get('preset'))}_{enh}_{lo}{hi}_{rep}"
    return raw


def _run_seed(master_seed: int, fingerprint: str) -> int:
    digest = sha256(f"{master_seed}:{fingerprint}".encode()).hexdigest()
    return int(digest[:15], 16)


def _grid_worker(args: tuple[dict, str]) -> dict:
    raw, run_dir = args
    config = parse_experiment(raw)
    try:
        result = run_experiment(config, out_dir=run_dir)
        return {"fingerprint": config.fingerprint, "name": config.name,
                "macro_f1": result.macro_f1, "status": "ok"}
    except Exception as exc:  # individual failures recorded, grid continues
        return {"fingerprint": config.fingerprint, "name": config.name,
                "macro_f1": None, "status": f"failed: {exc}"}


def run_grid(raw: dict, out_dir: str | Path, jobs: int = 1) -> list[dict]:
    """Cross-product run over the grid axes.

    One subdirectory per configuration fingerprint under out/runs;
    completed fingerprints (result.json present) are skipped, so reruns
    are free.  The ranked table lands in out/grid.csv, macro-F1
    descending, failures at the bottom.
    """
    spec = parse_grid(raw)
    base_seed = int(raw.get("seed", 0))
    out = Path(out_dir)
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)

    combos = list(itertools.product(spec.ngrams, spec.representations, spec.enhancements, spec.learners))
    rows: list[dict] = []
    pending: list[tuple[dict, str]] = []
    for combo in combos:
        probe = _grid_combo_config(dict(raw), combo, run_seed=0)
        fingerprint_seed = _run_seed(base_seed, parse_experiment(probe).fingerprint)
        raw_cfg = _grid_combo_config(dict(raw), combo, run_seed=fingerprint_seed)
        config = parse_experiment(raw_cfg)
        run_dir = runs_dir / config.fingerprint
        result_file = run_dir / "result.json"
        if result_file.exists():
            prior = json.loads(result_file.read_text(encoding="utf-8"))
            rows.append({"fingerprint": config.fingerprint, "name": prior["name"],
                         "macro_f1": prior["macro_f1"], "status": "ok", "reused": True})
        else:
            pending.append((raw_cfg, str(run_dir)))

    if jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for row in pool.map(_grid_worker, pending):
                rows.append({**row, "reused": False})
    else:
        for args in pending:
            rows.append({**_grid_worker(args), "reused": False})

    rows.sort(key=lambda r: (r["macro_f1"] is None, -(r["macro_f1"] or 0.0), r["fingerprint"]))
    lines = ["rank,name,fingerprint,macro_f1,status"]
    for rank, row in enumerate(rows, start=1):
        macro = repr(row["macro_f1"]) if row["macro_f1"] is not None else ""
        status = row["status"].replace(",", ";").replace("\n", " ")
        lines.append(f"{rank},{row['name']},{row['fingerprint']},{macro},{status}")
    _write_atomic(out / "grid.csv", "\n".join(lines) + "\n")
    return rows


# ---------------------------------------------------------------------------
# file prediction


def predict_file(artifact_path: str | Path, input_path: str | Path, output_path: str | Path) -> int:
    """Label a TSV of tweets with a saved model; returns the row count.

    The input needs `id` and `tweet` columns (OLID headers work).  Output
    is `id<TAB>label` using the task's TSV label codes.
    """
    model, task = load_artifact(artifact_path)
    input_path = Path(input_path)
    if not input_path.exists():
        raise DataError(f"data file not found: {input_path}")
    with input_path.open("r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n").split("\t")
        try:
            id_col = header.index("id")
            text_col = header.index("tweet")
        except ValueError:
            raise DataError(f"{input_path}: header must contain 'id' and 'tweet' columns") from None
        ids: list[str] = []
        docs: list[list[str]] = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if line == "":
                continue
            fields = line.split("\t")
            if len(fields) != len(header):
                raise DataError(f"{input_path}: line {lineno}: expected {len(header)} columns")
            ids.append(fields[id_col])
            docs.append(preprocess(fields[text_col]))
    preds = model.predict_tokens_batch(docs) if docs else []
    to_code = LABEL_TO_CODE[task]
    values = TASK_LABELS[task]
    lines = ["id\tlabel"]
    for row_id, pred in zip(ids, preds):
        lines.append(f"{row_id}\t{to_code[values[pred]]}")
    _write_atomic(output_path, "\n".join(lines) + "\n")
    return len(ids)


def evaluate_artifact(artifact_path: str | Path, data_path: str | Path, out_dir: str | Path) -> ClassReport:
    """CLI `eval`: score a saved model on a labeled OLID file."""
    model, task = load_artifact(artifact_path)
    dataset = load_olid(data_path, task)
    rep, matrix, _ = evaluate_model(model, dataset)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_eval_files(out, "", rep, matrix, TASK_LABELS[task])
    return rep


def split_to_files(
    data: str | Path, task: Task, spec: SplitSpec, out_dir: str | Path
) -> tuple[Path, Path]:
    """CLI `split`: write train.tsv / dev.tsv under out_dir."""
    dataset = load_olid(data, task)
    train, dev = stratified_split(dataset, spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_path = out / "train.tsv"
    dev_path = out / "dev.tsv"
    save_olid(train, train_path)
    save_olid(dev, dev_path)
    return train_path, dev_path


def augment_to_file(config: ExperimentConfig, out_dir: str | Path) -> Path:
    """CLI `augment`: write the enhanced training split as TSV.

    Uses the experiment-level enhancement; feature-space methods are
    rejected since they have no text form.
    """
    enh = config.enhancement
    if enh.method in ("none",) + FEATURE_METHODS:
        raise ConfigError(
            "augment needs a text-level enhancement method "
            "(synthetic, c1..c4 or per_class)"
        )
    dataset = load_olid(config.data, config.task)
    train, _ = stratified_split(dataset, config.split)
    seeds = _seed_stream(config.seed)
    embed_seed = next(seeds)
    enh_seed = next(seeds)

    def embedding() -> EmbeddingModel:
        corpus = load_olid_texts(config.data) if config.embedding_corpus == "file" else train.documents
        return train_embeddings(corpus, replace(config.augment, seed=embed_seed))

    enhanced = build_enhanced_dataset(train, enh, config.augment, embedding, enh_seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "train_enhanced.tsv"
    save_olid(enhanced, path)
    return path

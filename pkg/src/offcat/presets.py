"""Named experiment presets replicating the source systems.

Each preset is a full experiment config minus the data path (supplied on
the command line).  The named models:

- baseline_1_b / baseline_1_c: majority-class predictor, no enhancement
- baseline_2_b / baseline_2_c: logistic regression, no enhancement
- xgb_smote_b: regularized gradient boosting on SMOTE-balanced features
- model_a: soft vote over {gbt, adaboost, logreg}, each trained with
  random oversampling
- model_b: probability average of {gbt on SMOTE, naive bayes on
  synthetic paraphrases}
- model_1: soft vote over {logreg, adaboost, gbt} trained on C1
  (both task-C minority classes randomly oversampled)
- model_2: probability average of the best models on C1, C2 and C4
- model_3: probability average of the best models on C1 and C4

All presets use unigram+bigram TF-IDF features, the best setting found
on the original data.
"""

from __future__ import annotations

import copy

# hyperparameter bundles for the two gradient-boosting flavors: the
# regularized second-order one and the classic first-order one
LEARNER_PRESETS: dict[str, dict] = {
    "xgboost": {
        "kind": "gbt",
        "second_order": True,
        "leaf_l2": 1.0,
        "gain_threshold": 0.0,
        "max_depth": 6,
        "shrinkage": 0.3,
        "n_estimators": 100,
    },
    "gbc": {
        "kind": "gbt",
        "second_order": False,
        "leaf_l2": 0.0,
        "gain_threshold": 0.0,
        "max_depth": 3,
        "shrinkage": 0.1,
        "n_estimators": 100,
    },
}

_FEATURES_12 = {"min_n": 1, "max_n": 2, "min_df": 1, "representation": "tfidf"}

_SOFT_TRIO = {
    "mode": "soft",
    "members": [
        {"kind": "gbt", "preset": "xgboost", "enhancement": {"method": "ros"}},
        {"kind": "adaboost", "enhancement": {"method": "ros"}},
        {"kind": "logreg", "enhancement": {"method": "ros"}},
    ],
}


def _c_trio(dataset_config: str) -> dict:
    members = []
    for learner in ({"kind": "gbt", "preset": "xgboost"}, {"kind": "adaboost"}, {"kind": "logreg"}):
        member = dict(learner)
        member["enhancement"] = {"method": dataset_config}
        members.append(member)
    return {"mode": "soft", "members": members}


PRESETS: dict[str, dict] = {
    "baseline_1_b": {
        "task": "B",
        "features": _FEATURES_12,
        "model": {"kind": "majority"},
    },
    "baseline_2_b": {
        "task": "B",
        "features": _FEATURES_12,
        "model": {"kind": "logreg"},
    },
    "xgb_smote_b": {
        "task": "B",
        "features": _FEATURES_12,
        "model": {"kind": "gbt", "preset": "xgboost", "enhancement": {"method": "smote"}},
    },
    "model_a": {
        "task": "B",
        "features": _FEATURES_12,
        "model": _SOFT_TRIO,
    },
    "model_b": {
        "task": "B",
        "features": _FEATURES_12,
        "model": {
            "mode": "average",
            "members": [
                {"kind": "gbt", "preset": "xgboost", "enhancement": {"method": "smote"}},
                {"kind": "nb", "enhancement": {"method": "synthetic"}},
            ],
        },
    },
    "baseline_1_c": {
        "task": "C",
        "features": _FEATURES_12,
        "model": {"kind": "majority"},
    },
    "baseline_2_c": {
        "task": "C",
        "features": _FEATURES_12,
        "model": {"kind": "logreg"},
    },
    "model_1": {
        "task": "C",
        "features": _FEATURES_12,
        "model": _c_trio("c1"),
    },
    "model_2": {
        "task": "C",
        "features": _FEATURES_12,
        "model": {
            "mode": "average",
            "members": [
                _c_trio("c1"),
                {"kind": "logreg", "enhancement": {"method": "c2"}},
                _c_trio("c4"),
            ],
        },
    },
    "model_3": {
        "task": "C",
        "features": _FEATURES_12,
        "model": {
            "mode": "average",
            "members": [_c_trio("c1"), _c_trio("c4")],
        },
    },
}


def get_preset(name: str) -> dict:
    from .errors import ConfigError

    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    config = copy.deepcopy(PRESETS[name])
    config["name"] = name
    return config

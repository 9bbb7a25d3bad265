"""Offensive-tweet categorization under severe class imbalance.

Pipeline pieces: `corpus` (TSV ingestion, preprocessing, splits),
`features` (n-gram bag-of-words / TF-IDF), `resample` (ROS, RUS, SMOTE,
NearMiss), `augment` (skip-gram embeddings + paraphrase generation),
`learners` (classical probabilistic classifiers), `ensemble` (voting and
probability averaging), `evaluate` (per-class P/R/F1, macro-F1), and
`runner` (config-driven experiments and grids; CLI in `cli`).
"""

__version__ = "0.1.0"

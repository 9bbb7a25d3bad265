"""Confusion matrices, per-class precision/recall/F1, and macro-F1.

Conventions: confusion rows are gold labels, columns are predictions;
0/0 precision or recall is defined as 0 and flagged; macro-F1 averages
over the classes present in the gold labels (rows with support > 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: tuple[tuple[int, ...], ...]  # [gold][pred]

    @property
    def n_classes(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(np.sum(self.counts))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class ClassReport:
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    support: tuple[int, ...]
    macro_f1: float
    zero_division_classes: tuple[int, ...] = ()  # classes where 0/0 was coerced to 0


def confusion(golds: Sequence[int], preds: Sequence[int], n_classes: int) -> ConfusionMatrix:
    if len(golds) != len(preds):
        raise ValidationError(f"golds/preds length mismatch: {len(golds)} vs {len(preds)}")
    grid = np.zeros((n_classes, n_classes), dtype=np.int64)
    for g, p in zip(golds, preds):
        if not (0 <= g < n_classes and 0 <= p < n_classes):
            raise ValidationError(f"label pair ({g}, {p}) out of range for {n_classes} classes")
        grid[g, p] += 1
    return ConfusionMatrix(counts=tuple(tuple(int(x) for x in row) for row in grid))


def report(matrix: ConfusionMatrix) -> ClassReport:
    grid = matrix.as_array()
    k = matrix.n_classes
    diag = np.diag(grid).astype(np.float64)
    col = grid.sum(axis=0).astype(np.float64)
    row = grid.sum(axis=1).astype(np.float64)
    zero_div: list[int] = []
    precision = np.zeros(k)
    recall = np.zeros(k)
    f1 = np.zeros(k)
    for c in range(k):
        if col[c] > 0:
            precision[c] = diag[c] / col[c]
        else:
            zero_div.append(c)  # precision 0/0
        if row[c] > 0:
            recall[c] = diag[c] / row[c]
        else:
            zero_div.append(c)  # recall 0/0
        if precision[c] + recall[c] > 0:
            f1[c] = 2 * precision[c] * recall[c] / (precision[c] + recall[c])
        else:
            zero_div.append(c)  # F1 0/0
    present = row > 0
    macro = float(f1[present].mean()) if present.any() else 0.0
    return ClassReport(
        precision=tuple(float(x) for x in precision),
        recall=tuple(float(x) for x in recall),
        f1=tuple(float(x) for x in f1),
        support=tuple(int(x) for x in row),
        macro_f1=macro,
        zero_division_classes=tuple(sorted(set(zero_div))),
    )


def _names(n: int, class_names: Sequence[str] | None) -> list[str]:
    if class_names is None:
        return [f"class_{i}" for i in range(n)]
    if len(class_names) != n:
        raise ValidationError("class_names length mismatch")
    return list(class_names)


def render_report(rep: ClassReport, class_names: Sequence[str] | None = None) -> str:
    """Aligned plain-text table mirroring the per-class metric layout."""
    names = _names(len(rep.support), class_names)
    width = max(12, max(len(n) for n in names) + 2)
    lines = [f"{'class':<{width}}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>9}"]
    for i, name in enumerate(names):
        lines.append(
            f"{name:<{width}}{rep.precision[i]:>10.5f}{rep.recall[i]:>10.5f}"
            f"{rep.f1[i]:>10.5f}{rep.support[i]:>9d}"
        )
    lines.append(f"{'macro F1':<{width}}{rep.macro_f1:>10.5f}")
    if rep.zero_division_classes:
        flagged = ", ".join(names[i] for i in rep.zero_division_classes)
        lines.append(f"warning: 0/0 coerced to 0 for: {flagged}")
    return "\n".join(lines) + "\n"


def report_to_csv(rep: ClassReport, class_names: Sequence[str] | None = None) -> str:
    """Machine-readable metrics; floats use repr so values round-trip."""
    names = _names(len(rep.support), class_names)
    lines = ["class,precision,recall,f1,support"]
    for i, name in enumerate(names):
        lines.append(f"{name},{rep.precision[i]!r},{rep.recall[i]!r},{rep.f1[i]!r},{rep.support[i]}")
    lines.append(f"macro_f1,{rep.macro_f1!r},,,")
    return "\n".join(lines) + "\n"


def confusion_to_csv(
    matrix: ConfusionMatrix, class_names: Sequence[str] | None = None, normalized: bool = False
) -> str:
    """Counts grid as CSV; `normalized` makes rows stochastic (gold-row
    proportions), the form used for confusion-matrix heat maps."""
    names = _names(matrix.n_classes, class_names)
    grid = matrix.as_array().astype(np.float64)
    if normalized:
        sums = grid.sum(axis=1, keepdims=True)
        grid = np.divide(grid, sums, out=np.zeros_like(grid), where=sums > 0)
    lines = ["gold\\pred," + ",".join(names)]
    for i, name in enumerate(names):
        if normalized:
            cells = ",".join(repr(float(x)) for x in grid[i])
        else:
            cells = ",".join(str(int(x)) for x in grid[i])
        lines.append(f"{name},{cells}")
    return "\n".join(lines) + "\n"

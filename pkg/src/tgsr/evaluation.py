"""Confusion matrix, macro F1 and accuracy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows index the true class, columns the predicted class."""

    counts: np.ndarray
    categories: tuple[str, ...]

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError(f"confusion counts must be square, got shape {counts.shape}")
        if np.any(counts < 0):
            raise ValueError("confusion counts must be nonnegative")
        if len(self.categories) != counts.shape[0]:
            raise ValueError("one category name per class required")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(preds, truth, C: int, categories: Sequence[str] | None = None) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if preds.shape != truth.shape:
        raise ValueError(f"{preds.size} predictions but {truth.size} ground-truth labels")
    for name, a in (("prediction", preds), ("label", truth)):
        if a.size and (a.min() < 0 or a.max() >= C):
            raise ValueError(f"{name} index out of range [0, {C})")
    counts = np.zeros((C, C), dtype=np.int64)
    np.add.at(counts, (truth, preds), 1)
    if categories is None:
        categories = [str(c) for c in range(C)]
    return ConfusionMatrix(counts, tuple(categories))


def _safe_div(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def per_class_scores(cm: ConfusionMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class precision, recall and F1; zero denominators count as 0."""
    tp = np.diag(cm.counts)
    precision = _safe_div(tp, cm.counts.sum(axis=0))
    recall = _safe_div(tp, cm.counts.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return precision, recall, f1


def macro_f1(cm: ConfusionMatrix) -> float:
    return float(np.mean(per_class_scores(cm)[2]))


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("accuracy of an empty confusion matrix is undefined")
    return float(np.trace(cm.counts) / cm.total)


def evaluation_record(cm: ConfusionMatrix) -> dict:
    p, r, f = per_class_scores(cm)
    return {
        "categories": list(cm.categories),
        "per_class": [
            {"category": c, "precision": float(pc), "recall": float(rc), "f1": float(fc)}
            for c, pc, rc, fc in zip(cm.categories, p, r, f)
        ],
        "macro_f1": macro_f1(cm),
        "accuracy": accuracy(cm),
        "n_samples": cm.total,
        "confusion": cm.counts.tolist(),
    }


def format_report(cm: ConfusionMatrix) -> str:
    rec = evaluation_record(cm)
    width = max(9, *(len(c) for c in cm.categories))
    lines = [f"{'category':<{width}}  precision  recall  f1"]
    for row in rec["per_class"]:
        lines.append(f"{row['category']:<{width}}  {row['precision']:9.4f}  {row['recall']:6.4f}  {row['f1']:.4f}")
    lines.append("")
    lines.append(f"M-F1: {rec['macro_f1']:.4f}")
    lines.append(f"ACC:  {100 * rec['accuracy']:.2f}%  ({int(np.trace(cm.counts))}/{cm.total})")
    return "\n".join(lines) + "\n"

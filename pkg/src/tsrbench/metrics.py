"""Confusion matrix and the reported scores.

Macro averages (unweighted means over classes that actually occur) are
the canonical numbers; support-weighted averages are carried alongside
because the reference tables' averaging scheme is not documented, and
having both makes the comparison checkable either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pipeline import PipelineKind


class MetricsError(ValueError):
    pass


class LengthMismatch(MetricsError):
    pass


class LabelOutOfRange(MetricsError):
    pass


class EmptyMatrix(MetricsError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[t][p]: samples of true class t predicted as p."""

    counts: np.ndarray  # (k, k) int64

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise MetricsError(f"confusion matrix must be square, got {arr.shape}")
        if (arr < 0).any():
            raise MetricsError("confusion matrix counts cannot be negative")
        object.__setattr__(self, "counts", arr)

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Scores:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    per_class: tuple[ClassScores, ...]


@dataclass(frozen=True)
class EvalReport:
    pipeline: PipelineKind
    split: str  # "validation" or "test"
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    per_class: tuple[ClassScores, ...]


def confusion(truth, predicted, k: int) -> ConfusionMatrix:
    t = np.asarray(truth, dtype=np.int64).ravel()
    p = np.asarray(predicted, dtype=np.int64).ravel()
    if len(t) != len(p):
        raise LengthMismatch(f"{len(t)} truth labels vs {len(p)} predictions")
    if k < 1:
        raise MetricsError("need at least one class")
    for name, arr in (("truth", t), ("prediction", p)):
        if len(arr) and (arr.min() < 0 or arr.max() >= k):
            raise LabelOutOfRange(f"{name} labels must lie in [0, {k})")
    counts = np.bincount(t * k + p, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts)


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # 0/0 -> 0 by convention; den is never negative here.
    return np.divide(num, den, out=np.zeros_like(num, dtype=np.float64), where=den > 0)


def scores(cm: ConfusionMatrix) -> Scores:
    """Accuracy plus per-class precision/recall/F1, macro- and
    support-weighted averages over classes with nonzero support."""
    total = cm.total
    if total == 0:
        raise EmptyMatrix("cannot score an all-zero confusion matrix")
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    col_sums = counts.sum(axis=0)
    row_sums = counts.sum(axis=1)

    precision = _safe_div(diag, col_sums)
    recall = _safe_div(diag, row_sums)
    f1 = _safe_div(2.0 * precision * recall, precision + recall)

    present = row_sums > 0
    weights = row_sums[present] / row_sums[present].sum()
    per_class = tuple(
        ClassScores(float(precision[i]), float(recall[i]), float(f1[i]), int(row_sums[i]))
        for i in range(cm.k)
    )
    return Scores(
        accuracy=float(np.trace(counts) / total),
        macro_precision=float(precision[present].mean()),
        macro_recall=float(recall[present].mean()),
        macro_f1=float(f1[present].mean()),
        weighted_precision=float(precision[present] @ weights),
        weighted_recall=float(recall[present] @ weights),
        weighted_f1=float(f1[present] @ weights),
        per_class=per_class,
    )


def make_report(pipeline: PipelineKind, split: str, cm: ConfusionMatrix) -> EvalReport:
    s = scores(cm)
    return EvalReport(
        pipeline=pipeline,
        split=split,
        accuracy=s.accuracy,
        macro_precision=s.macro_precision,
        macro_recall=s.macro_recall,
        macro_f1=s.macro_f1,
        weighted_precision=s.weighted_precision,
        weighted_recall=s.weighted_recall,
        weighted_f1=s.weighted_f1,
        per_class=s.per_class,
    )

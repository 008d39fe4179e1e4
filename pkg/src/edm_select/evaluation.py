"""Classifier scoring and stratified cross-validation."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import Dataset, FoldAssignment

log = logging.getLogger(__name__)


class UndefinedMetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    counts: np.ndarray  # [true class, predicted class]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total)


def confusion(preds, truth, n_classes: int | None = None) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if preds.shape != truth.shape:
        raise ValueError("predictions and truth differ in length")
    if len(truth) == 0:
        raise ValueError("nothing to score")
    if n_classes is None:
        n_classes = int(max(preds.max(), truth.max())) + 1
    flat = np.bincount(truth * n_classes + preds, minlength=n_classes * n_classes)
    return ConfusionMatrix(flat.reshape(n_classes, n_classes))


def predicted_classes(dists: np.ndarray) -> np.ndarray:
    """Argmax of each distribution; ties go to the lowest class index."""
    return np.argmax(np.asarray(dists), axis=1)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    m = cm.counts
    tp = np.diag(m).astype(float)
    precision = [_ratio(t, s) for t, s in zip(tp, m.sum(axis=0))]
    recall = [_ratio(t, s) for t, s in zip(tp, m.sum(axis=1))]
    return np.array([_ratio(2 * p * r, p + r) for p, r in zip(precision, recall)])


def macro_f1(cm: ConfusionMatrix) -> float:
    return float(per_class_f1(cm).mean())


def midranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    ranks = np.empty(len(values))
    starts = np.flatnonzero(np.r_[True, sorted_vals[1:] != sorted_vals[:-1]])
    ends = np.r_[starts[1:], len(values)]
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = (s + 1 + e) / 2.0
    return ranks


def roc_value(scores, labels) -> float:
    """Area under the ROC curve from the Mann-Whitney rank sum.

    ``labels`` are +1 (positive) / -1; ``scores`` rank positives high.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC value needs both positive and negative instances")
    ranks = midranks(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def rmse(dists, truth) -> float:
    dists = np.atleast_2d(np.asarray(dists, dtype=float))
    truth = np.asarray(truth, dtype=int)
    if dists.shape[0] != len(truth):
        raise ValueError("distributions and truth differ in length")
    onehot = np.zeros_like(dists)
    onehot[np.arange(len(truth)), truth] = 1.0
    return float(math.sqrt(np.mean((dists - onehot) ** 2)))


@dataclass(frozen=True)
class MetricBundle:
    roc_value: float | None
    macro_f1: float
    accuracy: float
    rmse: float

    def as_dict(self) -> dict:
        return asdict(self)


def score(dists: np.ndarray, truth: np.ndarray, n_classes: int, positive: int) -> MetricBundle:
    """Every metric for one set of predicted distributions."""
    cm = confusion(predicted_classes(dists), truth, n_classes)
    try:
        roc = roc_value(dists[:, positive], np.where(truth == positive, 1, -1))
    except UndefinedMetricError:
        roc = None
    return MetricBundle(roc, macro_f1(cm), cm.accuracy(), rmse(dists, truth))


@dataclass(frozen=True, eq=False)
class CVResult:
    metrics: MetricBundle
    fold_metrics: tuple[MetricBundle | None, ...]  # None for a skipped fold
    skipped_folds: tuple[int, ...]
    predictions: np.ndarray  # pooled out-of-fold distributions; NaN rows for skipped folds


def cross_validate(d: Dataset, learner, folds: FoldAssignment) -> CVResult:
    """Train on each fold's complement, predict the fold, score the pooled predictions."""
    if len(folds.labels) != d.n_rows:
        raise ValueError("fold assignment does not match the dataset")
    present = np.flatnonzero(d.class_counts() > 0)
    pooled = np.full((d.n_rows, d.n_classes), np.nan)
    scored = np.zeros(d.n_rows, dtype=bool)
    per_fold: list[MetricBundle | None] = []
    skipped = []
    y = d.y
    for f in range(folds.n_folds):
        train, test = folds.split(f)
        if len(test) == 0:
            per_fold.append(None)
            continue
        if not np.all(np.isin(present, y[train])):
            log.warning("fold %d skipped: training split lacks a class value", f)
            skipped.append(f)
            per_fold.append(None)
            continue
        model = learner(d.subset(train))
        dists = np.asarray(model.predict_proba(d.rows[test]), dtype=float)
        pooled[test] = dists
        scored[test] = True
        per_fold.append(score(dists, y[test], d.n_classes, d.positive_class))
    if not scored.any():
        raise UndefinedMetricError("every fold was skipped")
    metrics = score(pooled[scored], y[scored], d.n_classes, d.positive_class)
    return CVResult(metrics, tuple(per_fold), tuple(skipped), pooled)

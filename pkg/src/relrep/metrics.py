"""Confusion matrices, precision/recall/F1 aggregation, and boxplot statistics.

Multiclass aggregation convention: per-class scores from the confusion
matrix; macro = unweighted means over all classes except the catch-all
(negative) class, with macro-F1 the mean of per-class F1 values; micro from
TP/FP/FN summed over all classes.  Degenerate 0/0 ratios are defined as 0.
The headline metric everywhere is the macro triple excluding the negative
class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import LabelSet
from .errors import InputError


class LengthMismatch(InputError):
    pass


class ClassOutOfRange(InputError):
    pass


class EmptyInput(InputError):
    pass


def confusion(preds, golds, num_classes: int) -> np.ndarray:
    """K x K counts, rows = gold, cols = predicted."""
    preds = np.asarray(preds, dtype=np.int64)
    golds = np.asarray(golds, dtype=np.int64)
    if preds.shape != golds.shape:
        raise LengthMismatch(f"{preds.size} predictions vs {golds.size} golds")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    if preds.size == 0:
        return cm
    if preds.min() < 0 or preds.max() >= num_classes:
        raise ClassOutOfRange("prediction outside [0, K)")
    if golds.min() < 0 or golds.max() >= num_classes:
        raise ClassOutOfRange("gold label outside [0, K)")
    np.add.at(cm, (golds, preds), 1)
    return cm


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); 0/0 is 0."""
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


@dataclass
class MetricsReport:
    per_class: list[tuple[float, float, float]]
    micro: tuple[float, float, float]
    macro: tuple[float, float, float]

    def headline(self) -> tuple[float, float, float]:
        return self.macro


def aggregate(cm: np.ndarray, labels: LabelSet) -> MetricsReport:
    k = len(labels)
    if cm.shape != (k, k):
        raise LengthMismatch(f"confusion matrix {cm.shape} vs {k} labels")
    per_class = []
    for i in range(k):
        tp = int(cm[i, i])
        fp = int(cm[:, i].sum()) - tp
        fn = int(cm[i, :].sum()) - tp
        per_class.append(prf(tp, fp, fn))
    scored = [m for i, m in enumerate(per_class) if i != labels.negative_index]
    if scored:
        macro = tuple(float(np.mean([m[j] for m in scored])) for j in range(3))
    else:
        macro = (0.0, 0.0, 0.0)
    tp_all = int(np.trace(cm))
    total = int(cm.sum())
    micro = prf(tp_all, total - tp_all, total - tp_all)
    return MetricsReport(per_class, micro, macro)


@dataclass
class BoxplotStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: list[float]


def boxplot_stats(values) -> BoxplotStats:
    """Quartiles by linear interpolation on order statistics; Tukey whiskers.

    Whiskers reach the most extreme points within 1.5*IQR of the quartiles
    and never pass the box; everything outside the fences is an outlier.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("boxplot statistics need at least one value")
    q1, median, q3 = (float(q) for q in np.percentile(arr, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    whisker_low = float(inside.min()) if inside.size else q1
    whisker_high = float(inside.max()) if inside.size else q3
    whisker_low = min(whisker_low, q1)
    whisker_high = max(whisker_high, q3)
    outliers = sorted(float(v) for v in arr[(arr < lo_fence) | (arr > hi_fence)])
    return BoxplotStats(float(arr.min()), q1, median, q3, float(arr.max()),
                        whisker_low, whisker_high, outliers)


@dataclass
class RunSetReport:
    stack: str
    per_seed: list[tuple[int, tuple[float, float, float]]]  # (seed, (P, R, F1))
    minima: tuple[float, float, float]
    means: tuple[float, float, float]
    maxima: tuple[float, float, float]
    boxplot: BoxplotStats


def summarize_runs(per_seed, stack_name: str) -> RunSetReport:
    """Collapse per-seed (P, R, F1) triples into the reported row.

    The table row carries the per-metric minimum across seeds; means and
    maxima ride along for the JSON report, and the boxplot summarizes the
    F1 values.
    """
    per_seed = list(per_seed)
    if not per_seed:
        raise EmptyInput("need at least one seed result")
    triples = np.array([m for _, m in per_seed], dtype=np.float64)
    return RunSetReport(
        stack=stack_name,
        per_seed=per_seed,
        minima=tuple(float(v) for v in triples.min(axis=0)),
        means=tuple(float(v) for v in triples.mean(axis=0)),
        maxima=tuple(float(v) for v in triples.max(axis=0)),
        boxplot=boxplot_stats(triples[:, 2]),
    )

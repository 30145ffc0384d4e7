"""Evaluation harness: budgeted k-fold splits, weighted error rate,
one-vs-all ROC curves with operating-point selection, and presence-absence
binary metrics.
"""

import math
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import DegenerateClass, EmptyRow, InsufficientData, LengthMismatch


@dataclass(frozen=True)
class FoldSplit:
    """Per-species segment indices for one cross-validation fold."""

    fold_id: int
    training: dict
    validation: dict


def kfold_budgeted_split(durations_by_species, budget, folds=10, seed=0):
    """Random segment selection with a per-species training-time budget.

    durations_by_species maps species code to a sequence of segment durations
    in seconds. For each fold the segments of each species are shuffled with
    a fold-specific seed and taken greedily until the cumulative duration
    reaches the budget (the segment that crosses the budget is kept, so the
    training time lies within one segment of it); the rest go to validation.
    """
    for code, durations in durations_by_species.items():
        if sum(durations) <= budget:
            raise InsufficientData(
                f"species {code}: {sum(durations):.1f}s total <= {budget}s budget"
            )
    splits = []
    for fold in range(folds):
        training = {}
        validation = {}
        for code in durations_by_species:
            durations = durations_by_species[code]
            rng = np.random.default_rng((seed, fold, zlib.crc32(code.encode("utf-8"))))
            order = rng.permutation(len(durations))
            taken = []
            total = 0.0
            for idx in order:
                if total >= budget:
                    break
                taken.append(int(idx))
                total += durations[idx]
            taken_set = set(taken)
            training[code] = sorted(taken)
            validation[code] = sorted(i for i in range(len(durations)) if i not in taken_set)
        splits.append(FoldSplit(fold_id=fold, training=training, validation=validation))
    return splits


@dataclass(frozen=True)
class WerReport:
    per_species_error: np.ndarray
    weighted_error_rate: float


def weighted_error_rate(confusion):
    """Mean of the per-species error rates of a confusion matrix.

    Rows are true species, columns predicted. The unweighted mean over
    species compensates for unbalanced validation sets.
    """
    conf = np.asarray(confusion, dtype=np.float64)
    row_sums = conf.sum(axis=1)
    if np.any(row_sums == 0):
        empty = np.flatnonzero(row_sums == 0).tolist()
        raise EmptyRow(f"no validation items for species rows {empty}")
    errors = 1.0 - np.diag(conf) / row_sums
    return WerReport(per_species_error=errors, weighted_error_rate=float(errors.mean()))


@dataclass(frozen=True)
class RocCurve:
    """Empirical one-vs-all ROC, points ordered by threshold descending."""

    class_index: int
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float


def roc_one_vs_all(scored_events, class_index):
    """ROC of one class against all others.

    scored_events is a sequence of (score, true_class, hyp_class) tuples;
    positives are events whose true class is class_index. A prediction is
    positive at threshold t when score >= t. Sentinel thresholds above the
    maximum and below the minimum score pin the (0,0) and (1,1) endpoints.
    """
    scores = np.array([s for s, _, _ in scored_events], dtype=np.float64)
    positive = np.array([t == class_index for _, t, _ in scored_events], dtype=bool)
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateClass(
            f"class {class_index}: {n_pos} positives, {n_neg} negatives"
        )
    thresholds = np.concatenate((
        [scores.max() + 1.0],
        np.unique(scores)[::-1],
        [scores.min() - 1.0],
    ))
    tpr = np.empty(len(thresholds))
    fpr = np.empty(len(thresholds))
    for i, t in enumerate(thresholds):
        predicted = scores >= t
        tpr[i] = (predicted & positive).sum() / n_pos
        fpr[i] = (predicted & ~positive).sum() / n_neg
    auc = float(trapezoid(tpr, fpr))
    return RocCurve(class_index=class_index, thresholds=thresholds, tpr=tpr, fpr=fpr, auc=auc)


def pick_operating_point(curve, max_fpr=0.05):
    """Highest-TPR ROC point with FPR <= max_fpr; ties take the largest
    threshold. The (0, 0) endpoint always qualifies, so there is always an
    answer."""
    best = None
    for t, tp, fp in zip(curve.thresholds, curve.tpr, curve.fpr):
        if fp > max_fpr:
            continue
        if best is None or tp > best[1] or (tp == best[1] and t > best[0]):
            best = (float(t), float(tp), float(fp))
    return best


def suggest_thresholds(scored_events, n_classes, max_fpr=0.05, margin=0.0):
    """Per-class acceptance thresholds from validation detection events.

    Unlike the plotting ROC, a class gate only ever sees events hypothesized
    as that class, so each class's operating point is picked on that subset.
    Classes that were never hypothesized for an impostor fall back to a level
    between the strongest impostor seen anywhere and the class's weakest true
    detection.

    Returns (thresholds, details) where details rows are
    (threshold, tpr, fpr, source) with source "roc" or "fallback".
    """
    impostors = [s for s, true, hyp in scored_events if true != hyp]
    ceiling = max(impostors) if impostors else None
    thresholds = np.full(n_classes, np.inf)
    details = []
    for ci in range(n_classes):
        mine = [(s, t, h) for s, t, h in scored_events if h == ci]
        pos = [s for s, t, _ in mine if t == ci]
        neg = [s for s, t, _ in mine if t != ci]
        if pos and neg:
            threshold, tpr, fpr = pick_operating_point(roc_one_vs_all(mine, ci), max_fpr)
            source = "roc"
        elif pos:
            floor = min(pos)
            threshold = (floor + ceiling) / 2.0 if ceiling is not None and ceiling < floor \
                else floor
            tpr, fpr, source = 1.0, 0.0, "fallback"
        else:
            threshold, tpr, fpr, source = np.inf, 0.0, 0.0, "fallback"
        thresholds[ci] = threshold + margin
        details.append((threshold + margin, tpr, fpr, source))
    return thresholds, details


@dataclass(frozen=True)
class BinaryMetrics:
    tp: int
    fp: int
    tn: int
    fn: int
    recall: float | None
    precision: float | None
    f1: float | None
    mcc: float | None
    specificity: float | None
    accuracy: float | None


def binary_metrics_from_counts(tp, fp, tn, fn):
    """All presence-absence metrics from raw decision counts.

    Ratios with zero denominators are None, never silently zero.
    """
    def ratio(num, den):
        return num / den if den else None

    recall = ratio(tp, tp + fn)
    precision = ratio(tp, tp + fp)
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    specificity = ratio(tn, tn + fp)
    accuracy = ratio(tp + tn, tp + fp + tn + fn)
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(denom) if denom else None
    return BinaryMetrics(tp=tp, fp=fp, tn=tn, fn=fn, recall=recall, precision=precision,
                         f1=f1, mcc=mcc, specificity=specificity, accuracy=accuracy)


def binary_metrics(predicted, truth):
    """Flatten aligned presence matrices into decisions and score them."""
    pred = np.asarray(predicted, dtype=bool)
    true = np.asarray(truth, dtype=bool)
    if pred.shape != true.shape:
        raise LengthMismatch(f"shape mismatch: {pred.shape} vs {true.shape}")
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    tn = int(np.sum(~pred & ~true))
    fn = int(np.sum(~pred & true))
    return binary_metrics_from_counts(tp, fp, tn, fn)

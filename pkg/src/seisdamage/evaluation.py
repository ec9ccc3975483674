"""Classification metrics, ROC analysis and k-fold cross-validation.

Confusion matrices put the true class on rows and the predicted class on
columns. Precision, recall and F-score are reported per class
(one-vs-rest) and as an unweighted macro average unless
``average="weighted"`` is requested. Ratios whose denominator is zero are
reported as 0 and named in the returned ``flags``.
"""
from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import DamageClass, FeatureTable
from .folds import FoldPlan, kfold_plan
from .models.baselines import RegularizedCovarianceWarning
from .models.registry import ModelConfig, fit_model, predict_model
from .preprocess import apply_minmax, fit_minmax

__all__ = [
    "ConfusionMatrix", "BasicMetrics", "MetricVector", "ClassErrorReport", "RocCurve",
    "PreprocessConfig", "FoldResult", "EvaluationReport", "confusion", "basic_metrics",
    "cohen_kappa", "mcc", "multiclass_mcc", "roc_auc", "roc_curve", "binary_auc", "class_prediction_error",
    "kfold_plan", "FoldPlan", "cross_validate", "metric_vector",
]

DAMAGE_LABELS = tuple(int(c) for c in DamageClass)


class EmptyConfusionError(ValueError):
    """The confusion matrix holds no samples."""


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray
    labels: tuple

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] != len(self.labels):
            raise ValueError("counts must be a square matrix matching the label index")
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def tp(self) -> np.ndarray:
        return np.diag(self.counts).copy()

    @property
    def fp(self) -> np.ndarray:
        return self.counts.sum(axis=0) - self.tp

    @property
    def fn(self) -> np.ndarray:
        return self.counts.sum(axis=1) - self.tp

    @property
    def tn(self) -> np.ndarray:
        return self.total - self.tp - self.fp - self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.labels != other.labels:
            raise ValueError("cannot add confusion matrices over different labels")
        return ConfusionMatrix(self.counts + other.counts, self.labels)

    def _require_nonempty(self):
        if self.total == 0:
            raise EmptyConfusionError("confusion matrix has no samples")


def confusion(true_labels, predicted_labels, labels=DAMAGE_LABELS) -> ConfusionMatrix:
    """Count (true, predicted) pairs over ``labels``."""
    t = np.asarray(true_labels).ravel()
    p = np.asarray(predicted_labels).ravel()
    if t.size != p.size:
        raise ValueError(f"length mismatch: {t.size} true vs {p.size} predicted labels")
    if t.size == 0:
        raise ValueError("cannot build a confusion matrix from empty inputs")
    labels = tuple(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    try:
        ti = np.array([index[v] for v in t.tolist()], dtype=np.int64)
        pi = np.array([index[v] for v in p.tolist()], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} is not in the label index {labels}") from None
    L = len(labels)
    counts = np.bincount(ti * L + pi, minlength=L * L).reshape(L, L)
    return ConfusionMatrix(counts, labels)


# ---------------------------------------------------------------------------
# threshold metrics


def _safe_ratio(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    undefined = den == 0
    out = np.where(undefined, 0.0, num / np.where(undefined, 1.0, den))
    return out, undefined


@dataclass(frozen=True)
class BasicMetrics:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f_score: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f_score: float
    support: np.ndarray
    average: str = "macro"
    flags: tuple = ()


def basic_metrics(cm: ConfusionMatrix, average: str = "macro") -> BasicMetrics:
    """Accuracy plus per-class and averaged precision, recall and F-score.

    ``average`` is ``"macro"`` (unweighted mean over classes) or
    ``"weighted"`` (weighted by class support).
    """
    cm._require_nonempty()
    if average not in ("macro", "weighted"):
        raise ValueError(f"average must be 'macro' or 'weighted', got {average!r}")
    tp, fp, fn = cm.tp, cm.fp, cm.fn
    precision, p_undef = _safe_ratio(tp, tp + fp)
    recall, r_undef = _safe_ratio(tp, tp + fn)
    f_score, f_undef = _safe_ratio(2 * tp, 2 * tp + fp + fn)
    flags = []
    for name, undef in (("precision", p_undef), ("recall", r_undef), ("f_score", f_undef)):
        flags += [f"{name}[{cm.labels[i]}]=0/0" for i in np.flatnonzero(undef)]
    support = cm.counts.sum(axis=1)
    if average == "macro":
        w = np.full(len(cm.labels), 1.0 / len(cm.labels))
    else:
        w = support / support.sum()
    return BasicMetrics(
        accuracy=float(np.trace(cm.counts) / cm.total),
        precision=precision, recall=recall, f_score=f_score,
        macro_precision=float(w @ precision), macro_recall=float(w @ recall),
        macro_f_score=float(w @ f_score), support=support, average=average, flags=tuple(flags),
    )


def cohen_kappa(cm: ConfusionMatrix, return_flag: bool = False):
    """Chance-corrected agreement ``(p_o - p_e) / (1 - p_e)``.

    When ``p_e == 1`` (all mass in one cell) kappa is 1 if ``p_o == 1``
    and 0 otherwise, and the flag is set.
    """
    cm._require_nonempty()
    c = cm.counts
    n = cm.total
    p_o = np.trace(c) / n
    # exact integer arithmetic for p_e avoids spurious rounding near 1
    pe_num = sum(int(r) * int(k) for r, k in zip(c.sum(axis=1), c.sum(axis=0)))
    flag = pe_num == n * n
    if flag:
        kappa = 1.0 if p_o == 1.0 else 0.0
    else:
        kappa = float((n * int(np.trace(c)) - pe_num) / (n * n - pe_num))
    return (kappa, flag) if return_flag else kappa


def multiclass_mcc(cm: ConfusionMatrix, return_flag: bool = False):
    """Multi-category MCC for any number of classes.

    ``(c*s - sum_k p_k t_k) / sqrt((s^2 - sum_k p_k^2)(s^2 - sum_k t_k^2))``
    with ``c`` the trace, ``s`` the total, ``t_k`` row sums and ``p_k``
    column sums. Computed in integer arithmetic up to the final division.
    """
    cm._require_nonempty()
    c = [[int(v) for v in row] for row in cm.counts]
    L = len(c)
    s = sum(map(sum, c))
    trace = sum(c[i][i] for i in range(L))
    t = [sum(row) for row in c]
    p = [sum(c[i][j] for i in range(L)) for j in range(L)]
    num = trace * s - sum(pk * tk for pk, tk in zip(p, t))
    den = (s * s - sum(pk * pk for pk in p)) * (s * s - sum(tk * tk for tk in t))
    if den == 0:
        return (0.0, True) if return_flag else 0.0
    value = num / math.sqrt(den)
    return (value, False) if return_flag else value


def mcc(cm: ConfusionMatrix, return_flag: bool = False):
    """Matthews correlation coefficient.

    Binary matrices use ``(TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN))``
    with the second label as the positive class; larger matrices use
    :func:`multiclass_mcc`, which reduces to the binary formula for two
    classes. A zero factor under the root gives 0 with the flag set.
    """
    cm._require_nonempty()
    if len(cm.labels) != 2:
        return multiclass_mcc(cm, return_flag)
    (tn, fp), (fn, tp) = ([int(v) for v in row] for row in cm.counts)
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if den == 0:
        return (0.0, True) if return_flag else 0.0
    value = (tp * tn - fp * fn) / math.sqrt(den)
    return (value, False) if return_flag else value


# ---------------------------------------------------------------------------
# ROC


def _midranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    _, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    upper = np.cumsum(counts)
    return (upper - (counts - 1) / 2.0)[inv]


def binary_auc(is_positive, scores) -> float:
    """Area under the ROC curve via the Mann-Whitney rank sum.

    Equals the fraction of (positive, negative) pairs ordered correctly,
    ties counting one half.
    """
    pos = np.asarray(is_positive, dtype=bool).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative sample")
    r = _midranks(s)
    return float((r[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def auc(self) -> float:
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2.0))


def roc_curve(is_positive, scores) -> RocCurve:
    """ROC points at every distinct score threshold, from (0, 0) to (1, 1).

    Tied scores move along a diagonal segment, so the trapezoid area
    equals :func:`binary_auc`.
    """
    pos = np.asarray(is_positive, dtype=bool).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one positive and one negative sample")
    thr, inv = np.unique(-s, return_inverse=True)
    tp = np.bincount(inv, weights=pos, minlength=thr.size).cumsum()
    fp = np.bincount(inv, weights=~pos, minlength=thr.size).cumsum()
    return RocCurve(
        np.concatenate([[0.0], fp / n_neg]),
        np.concatenate([[0.0], tp / n_pos]),
        np.concatenate([[np.inf], -thr]),
    )


def roc_auc(true_labels, scores, labels=DAMAGE_LABELS, return_details: bool = False):
    """Macro one-vs-rest AUC from per-class score columns.

    ``scores[:, i]`` scores membership of ``labels[i]``. Classes absent
    from ``true_labels`` (or forming the whole sample) are skipped and
    flagged. With ``return_details`` returns ``(macro, per_class, flags)``
    where skipped classes have ``nan``.
    """
    t = np.asarray(true_labels).ravel()
    S = np.asarray(scores, dtype=np.float64)
    if S.ndim == 1:
        S = S[:, None]
    labels = tuple(labels)
    if S.shape != (t.size, len(labels)):
        raise ValueError(f"scores must have shape ({t.size}, {len(labels)}), got {S.shape}")
    per_class = np.full(len(labels), np.nan)
    flags = []
    for i, lab in enumerate(labels):
        pos = t == lab
        if pos.all() or not pos.any():
            flags.append(f"roc[{lab}]=skipped")
            continue
        per_class[i] = binary_auc(pos, S[:, i])
    valid = ~np.isnan(per_class)
    macro = float(per_class[valid].mean()) if valid.any() else 0.0
    if return_details:
        return macro, per_class, tuple(flags)
    return macro


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ClassErrorReport:
    """Per true class: support and how its rows were predicted."""

    labels: tuple
    counts: np.ndarray
    support: np.ndarray

    def rows(self):
        """``(true_label, support, count_per_predicted_label...)`` tuples."""
        for i, lab in enumerate(self.labels):
            yield (lab, int(self.support[i]), *(int(v) for v in self.counts[i]))


def class_prediction_error(cm: ConfusionMatrix) -> ClassErrorReport:
    return ClassErrorReport(cm.labels, cm.counts.copy(), cm.counts.sum(axis=1))


@dataclass(frozen=True)
class MetricVector:
    accuracy: float
    roc_auc: float
    recall: float
    precision: float
    f_score: float
    cks: float
    mcc: float
    wall_time: float = 0.0
    flags: tuple = ()

    def as_row(self) -> tuple:
        return (self.accuracy, self.roc_auc, self.recall, self.precision, self.f_score,
                self.cks, self.mcc, self.wall_time)


def metric_vector(cm: ConfusionMatrix, true_labels=None, scores=None, wall_time: float = 0.0,
                  average: str = "macro") -> MetricVector:
    """All seven metrics for one confusion matrix; ROC is 0 without scores."""
    bm = basic_metrics(cm, average)
    kappa, k_flag = cohen_kappa(cm, return_flag=True)
    m, m_flag = mcc(cm, return_flag=True)
    flags = list(bm.flags)
    if k_flag:
        flags.append("cks=degenerate")
    if m_flag:
        flags.append("mcc=0/0")
    if scores is None:
        auc = 0.0
        flags.append("roc=no_scores")
    else:
        auc, _, roc_flags = roc_auc(true_labels, scores, cm.labels, return_details=True)
        flags += roc_flags
    return MetricVector(bm.accuracy, auc, bm.macro_recall, bm.macro_precision, bm.macro_f_score,
                        kappa, m, float(wall_time), tuple(flags))


# ---------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class PreprocessConfig:
    """Per-fold preprocessing: Max-Min normalisation fitted on the training split."""

    normalize: bool = True
    feature_range: tuple = (0.0, 1.0)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    test_index: np.ndarray
    predicted: np.ndarray | None
    scores: np.ndarray | None
    seconds: float
    skipped: str | None = None
    notes: tuple = ()


@dataclass(frozen=True)
class EvaluationReport:
    model: ModelConfig
    metrics: MetricVector
    confusion: ConfusionMatrix
    fold_metrics: tuple
    class_error: ClassErrorReport
    roc_curves: dict
    oof_predicted: np.ndarray
    oof_scores: np.ndarray
    evaluated: np.ndarray
    skipped_folds: tuple = ()
    flags: tuple = field(default=())


def _run_fold(X, y, labels, config, train, test, fold, seed, prep):
    if np.unique(y[train]).size < 2:
        return FoldResult(fold, test, None, None, 0.0, "single class in training split")
    start = time.perf_counter()
    Xtr, Xte = X[train], X[test]
    if prep.normalize:
        norm = fit_minmax(Xtr, prep.feature_range)
        Xtr, Xte = apply_minmax(norm, Xtr), apply_minmax(norm, Xte)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RegularizedCovarianceWarning)
        model = fit_model(config, Xtr, y[train], seed=seed + fold)
    notes = ("regularized_covariance",) if any(
        issubclass(w.category, RegularizedCovarianceWarning) for w in caught) else ()
    pred, s = predict_model(model, Xte)
    seconds = time.perf_counter() - start
    # align score columns with the full label index; unseen classes score -inf
    full = np.full((test.size, len(labels)), -np.inf)
    for j, cls in enumerate(model.classes):
        full[:, labels.index(int(cls))] = s[:, j]
    return FoldResult(fold, test, np.asarray(pred, dtype=np.int64), full, seconds, None, notes)


def _run_fold_job(args):
    return _run_fold(*args)


def cross_validate(table: FeatureTable, model_config: ModelConfig, plan: FoldPlan,
                   preprocessing: PreprocessConfig | None = None, workers: int = 1,
                   seed: int = 0, labels=DAMAGE_LABELS, average: str = "macro") -> EvaluationReport:
    """k-fold cross-validation with metrics on pooled out-of-fold predictions.

    Each fold fits normalisation on its training split only. Folds whose
    training split holds a single class are skipped and reported. Results
    do not depend on ``workers``; wall time is the summed per-fold
    training plus prediction time.
    """
    if not table.is_labeled:
        raise ValueError("cross-validation needs a labeled table")
    if plan.n != len(table):
        raise ValueError(f"fold plan covers {plan.n} rows but the table has {len(table)}")
    prep = preprocessing or PreprocessConfig()
    labels = tuple(labels)
    X = np.asarray(table.features)
    y = np.asarray(table.labels)
    jobs = [(X, y, labels, model_config, tr, te, f, seed, prep)
            for f, (tr, te) in enumerate(plan.splits())]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_fold_job, jobs))
    else:
        results = [_run_fold(*job) for job in jobs]

    n = len(table)
    oof_pred = np.full(n, -1, dtype=np.int64)
    oof_scores = np.full((n, len(labels)), np.nan)
    evaluated = np.zeros(n, dtype=bool)
    fold_metrics, skipped, notes, total_time = [], [], [], 0.0
    for r in results:
        if r.skipped is not None:
            skipped.append((r.fold, r.skipped))
            continue
        oof_pred[r.test_index] = r.predicted
        oof_scores[r.test_index] = r.scores
        evaluated[r.test_index] = True
        total_time += r.seconds
        notes += [nt for nt in r.notes if nt not in notes]
        fcm = confusion(y[r.test_index], r.predicted, labels)
        fold_metrics.append((r.fold, metric_vector(fcm, y[r.test_index], r.scores, r.seconds, average)))
    if not evaluated.any():
        raise ValueError("every fold was skipped; nothing to evaluate")
    cm = confusion(y[evaluated], oof_pred[evaluated], labels)
    metrics = metric_vector(cm, y[evaluated], oof_scores[evaluated], total_time, average)
    curves = {}
    for i, lab in enumerate(labels):
        pos = y[evaluated] == lab
        if pos.any() and not pos.all():
            curves[lab] = roc_curve(pos, oof_scores[evaluated, i])
    flags = list(metrics.flags) + [f"fold{f}=skipped({why})" for f, why in skipped] + notes
    metrics = MetricVector(*metrics.as_row(), flags=tuple(flags))
    return EvaluationReport(model_config, metrics, cm, tuple(fold_metrics), class_prediction_error(cm),
                            curves, oof_pred, oof_scores, evaluated, tuple(skipped), tuple(flags))

"""Max-Min normalisation, IQR outlier flagging, PCA and the Predictive
Power Score (PPS).

Every function takes either a :class:`~seisdamage.dataset.FeatureTable` or a
plain 2-D array of shape ``(n_rows, n_features)``; transforms return the
same kind they were given.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FeatureTable
from .folds import kfold_plan


class NotFittedError(RuntimeError):
    """A transform was applied without a fitted model."""


def _unpack(data):
    if isinstance(data, FeatureTable):
        return data.features, tuple(data.columns)
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {X.shape}")
    return X, None


def _repack(data, X, columns=None):
    if isinstance(data, FeatureTable):
        return data.with_features(X, columns)
    return X


# ---------------------------------------------------------------------------
# Max-Min normalisation


@dataclass(frozen=True)
class NormalizationModel:
    """Per-feature training minima/maxima and the target range.

    Features with ``max == min`` are flagged in ``degenerate`` and map to
    ``new_min``.
    """

    min: np.ndarray
    max: np.ndarray
    new_min: float = 0.0
    new_max: float = 1.0
    columns: tuple[str, ...] | None = None

    @property
    def degenerate(self) -> np.ndarray:
        return self.max == self.min


def fit_minmax(data, feature_range=(0.0, 1.0)) -> NormalizationModel:
    X, columns = _unpack(data)
    if X.shape[0] == 0:
        raise ValueError("cannot fit normalisation on an empty table")
    lo, hi = (float(v) for v in feature_range)
    if not hi > lo:
        raise ValueError(f"invalid target range {feature_range}")
    return NormalizationModel(X.min(axis=0), X.max(axis=0), lo, hi, columns)


def apply_minmax(model: NormalizationModel | None, data):
    """Map each feature to ``[new_min, new_max]`` using training statistics.

    Values outside the training range extrapolate linearly.
    """
    if model is None:
        raise NotFittedError("apply_minmax called before fit_minmax")
    X, columns = _unpack(data)
    if model.columns is not None and columns is not None:
        unknown = [c for c in columns if c not in model.columns]
        if unknown:
            raise KeyError(f"feature {unknown[0]!r} was not present when the normalisation was fitted")
        X = X[:, [columns.index(c) for c in model.columns]]
        columns = model.columns
    elif X.shape[1] != model.min.size:
        raise ValueError(f"expected {model.min.size} features, got {X.shape[1]}")
    span = model.max - model.min
    safe = np.where(span > 0, span, 1.0)
    scaled = (X - model.min) / safe * (model.new_max - model.new_min) + model.new_min
    scaled = np.where(span > 0, scaled, model.new_min)
    return _repack(data, scaled, columns)


# ---------------------------------------------------------------------------
# Outliers


@dataclass(frozen=True)
class IqrReport:
    """Quartiles, fences and the outlier mask (rows are never removed)."""

    q1: np.ndarray
    q3: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    mask: np.ndarray
    columns: tuple[str, ...] | None = None

    @property
    def iqr(self) -> np.ndarray:
        return self.q3 - self.q1

    @property
    def counts(self) -> np.ndarray:
        return self.mask.sum(axis=0)


def iqr_flags(data, whisker: float = 1.5) -> IqrReport:
    """Flag values beyond ``whisker * IQR`` outside the quartiles.

    Quartiles interpolate linearly between order statistics at zero-based
    position ``p * (n - 1)``.
    """
    X, columns = _unpack(data)
    if X.shape[0] < 4:
        raise ValueError(f"IQR needs at least 4 values per feature, got {X.shape[0]}")
    q1, q3 = np.quantile(X, [0.25, 0.75], axis=0, method="linear")
    iqr = q3 - q1
    lower = q1 - whisker * iqr
    upper = q3 + whisker * iqr
    mask = (X < lower) | (X > upper)
    return IqrReport(q1, q3, lower, upper, mask, columns)


# ---------------------------------------------------------------------------
# PCA


@dataclass(frozen=True)
class PcaModel:
    """Principal axes of the centred data.

    ``components`` holds the unit eigenvectors as columns, ordered by
    descending eigenvalue. Each eigenvector's first coordinate of
    non-negligible magnitude is positive.
    """

    mean: np.ndarray
    eigenvalues: np.ndarray
    components: np.ndarray
    n_retained: int | None = None
    columns: tuple[str, ...] | None = None

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.eigenvalues / self.eigenvalues.sum()


def fit_pca(data, n_components: int | None = None) -> PcaModel:
    X, columns = _unpack(data)
    n, dim = X.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 rows")
    if n_components is not None and not 1 <= n_components <= dim:
        raise ValueError(f"n_components must lie in [1, {dim}], got {n_components}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(-vals, kind="stable")
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    if vals.sum() <= 0:
        raise ValueError("data has zero total variance")
    for j in range(dim):
        col = vecs[:, j]
        lead = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max())[0]
        if col[lead] < 0:
            vecs[:, j] = -col
    return PcaModel(mean, vals, vecs, n_components, columns)


def project_pca(model: PcaModel, data, d: int | None = None):
    """``Y_i = E_d^T (X_i - mean)`` for the ``d`` leading components."""
    X, _ = _unpack(data)
    d = d if d is not None else (model.n_retained or model.components.shape[1])
    if not 1 <= d <= model.components.shape[1]:
        raise ValueError(f"d must lie in [1, {model.components.shape[1]}], got {d}")
    Y = (X - model.mean) @ model.components[:, :d]
    return _repack(data, Y, tuple(f"PC{i + 1}" for i in range(d)))


def reconstruct_pca(model: PcaModel, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    return Y @ model.components[:, : Y.shape[1]].T + model.mean


# ---------------------------------------------------------------------------
# Predictive Power Score


def _best_split_regression(y_sorted: np.ndarray, valid: np.ndarray):
    csum = np.cumsum(y_sorted)
    csq = np.cumsum(y_sorted * y_sorted)
    n = y_sorted.size
    nl = np.arange(1, n)
    nr = n - nl
    sl, sr = csum[:-1], csum[-1] - csum[:-1]
    sse = (csq[-1] - sl * sl / nl - sr * sr / nr)
    sse = np.where(valid, sse, np.inf)
    k = int(np.argmin(sse))
    return k, sse[k]


def _best_split_gini(y_sorted: np.ndarray, valid: np.ndarray, n_classes: int):
    onehot = np.zeros((y_sorted.size, n_classes))
    onehot[np.arange(y_sorted.size), y_sorted] = 1.0
    cl = np.cumsum(onehot, axis=0)[:-1]
    cr = cl[-1] + onehot[-1] - cl
    nl = cl.sum(axis=1)
    nr = cr.sum(axis=1)
    impurity = (nl - (cl * cl).sum(axis=1) / nl) + (nr - (cr * cr).sum(axis=1) / nr)
    impurity = np.where(valid, impurity, np.inf)
    k = int(np.argmin(impurity))
    return k, impurity[k]


class _IntervalTree:
    """Depth-limited single-feature tree stored as sorted cut points."""

    def __init__(self, max_depth: int, categorical: bool, n_classes: int = 0):
        self.max_depth = max_depth
        self.categorical = categorical
        self.n_classes = n_classes

    def _leaf(self, y):
        if self.categorical:
            return float(np.argmax(np.bincount(y, minlength=self.n_classes)))
        return float(y.mean())

    def _grow(self, x, y, depth, cuts, leaves):
        if depth == self.max_depth or x.size < 2 or x[0] == x[-1] or np.all(y == y[0]):
            leaves.append(self._leaf(y))
            return
        valid = x[1:] != x[:-1]
        if self.categorical:
            k, _ = _best_split_gini(y, valid, self.n_classes)
        else:
            k, _ = _best_split_regression(y, valid)
        thr = 0.5 * (x[k] + x[k + 1])
        self._grow(x[: k + 1], y[: k + 1], depth + 1, cuts, leaves)
        cuts.append(thr)
        self._grow(x[k + 1:], y[k + 1:], depth + 1, cuts, leaves)

    def fit(self, x, y):
        order = np.argsort(x, kind="stable")
        cuts: list[float] = []
        leaves: list[float] = []
        self._grow(x[order], y[order], 0, cuts, leaves)
        self.cuts = np.array(cuts)
        self.leaves = np.array(leaves)
        return self

    def predict(self, x):
        return self.leaves[np.searchsorted(self.cuts, x, side="left")]


def _weighted_f1(y_true, y_pred, n_classes):
    f = 0.0
    for c in range(n_classes):
        tp = np.sum((y_true == c) & (y_pred == c))
        fp = np.sum((y_true != c) & (y_pred == c))
        fn = np.sum((y_true == c) & (y_pred != c))
        denom = 2 * tp + fp + fn
        if denom:
            f += (2 * tp / denom) * np.sum(y_true == c)
    return float(f / y_true.size)


@dataclass(frozen=True)
class PpsCell:
    """Score of one predictor -> target pair."""

    score: float
    metric: str
    model_error: float
    baseline_error: float
    flag: str = ""


def pps_score(x, y, categorical: bool = False, cv_folds: int = 4, seed: int = 0, max_depth: int = 4) -> PpsCell:
    """Predictive power of ``x`` for ``y`` under cross-validation.

    A depth-limited tree on ``x`` alone predicts ``y`` out of fold. Numeric
    targets score ``1 - MAE_model / MAE_median`` where the baseline predicts
    the training-fold median; categorical targets score
    ``(F - F_naive) / (1 - F_naive)`` on the weighted F-score, the naive
    model predicting the training-fold majority class. Scores are floored
    at 0. A target equal to the predictor scores 1.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < 30:
        raise ValueError(f"PPS needs at least 30 rows, got {x.size}")
    if cv_folds < 2:
        raise ValueError("cv_folds must be at least 2")
    metric = "f1_weighted" if categorical else "mae"
    if np.array_equal(x, y):
        return PpsCell(1.0, metric, 0.0, float("nan"), "identity")
    if categorical:
        classes, yc = np.unique(y, return_inverse=True)
        n_classes = classes.size
    else:
        yc = y.astype(np.float64)
        n_classes = 0
    plan = kfold_plan(x.size, cv_folds, seed)
    pred = np.empty(x.size)
    base = np.empty(x.size)
    for train, test in plan.splits():
        tree = _IntervalTree(max_depth, categorical, n_classes).fit(x[train], yc[train])
        pred[test] = tree.predict(x[test])
        if categorical:
            base[test] = np.argmax(np.bincount(yc[train], minlength=n_classes))
        else:
            base[test] = np.median(yc[train])
    if categorical:
        f_model = _weighted_f1(yc, pred.astype(np.int64), n_classes)
        f_naive = _weighted_f1(yc, base.astype(np.int64), n_classes)
        if f_naive >= 1.0:
            return PpsCell(0.0, metric, f_model, f_naive, "degenerate_target")
        return PpsCell(max(0.0, (f_model - f_naive) / (1.0 - f_naive)), metric, f_model, f_naive)
    mae_model = float(np.mean(np.abs(pred - yc)))
    mae_base = float(np.mean(np.abs(base - yc)))
    if mae_base == 0.0:
        return PpsCell(0.0, metric, mae_model, mae_base, "degenerate_target")
    return PpsCell(max(0.0, 1.0 - mae_model / mae_base), metric, mae_model, mae_base)


@dataclass(frozen=True)
class PpsReport:
    """PPS of every predictor (rows) for every target (columns)."""

    predictors: tuple[str, ...]
    targets: tuple[str, ...]
    scores: np.ndarray
    metrics: tuple[str, ...]
    flags: dict

    def score(self, predictor: str, target: str) -> float:
        return float(self.scores[self.predictors.index(predictor), self.targets.index(target)])


def pps_matrix(table: FeatureTable, cv_folds: int = 4, seed: int = 0) -> PpsReport:
    """PPS for every feature against every feature and the table targets.

    ``MIDR`` is scored as a numeric target and ``CLASS`` as a categorical
    one when present. A feature predicting itself scores 1.
    """
    if len(table) < 30:
        raise ValueError(f"PPS needs at least 30 rows, got {len(table)}")
    predictors = tuple(table.columns)
    targets = list(predictors)
    if table.midr is not None:
        targets.append("MIDR")
    if table.labels is not None:
        targets.append("CLASS")
    scores = np.zeros((len(predictors), len(targets)))
    metrics = []
    flags = {}
    for j, tname in enumerate(targets):
        categorical = tname == "CLASS"
        metrics.append("f1_weighted" if categorical else "mae")
        y = table.column(tname)
        for i, pname in enumerate(predictors):
            if pname == tname:
                scores[i, j] = 1.0
                continue
            cell = pps_score(table.column(pname), y, categorical, cv_folds, seed)
            scores[i, j] = cell.score
            if cell.flag:
                flags[(pname, tname)] = cell.flag
    return PpsReport(predictors, tuple(targets), scores, tuple(metrics), flags)

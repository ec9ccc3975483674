"""Simple comparison classifiers: k-nearest neighbours, Gaussian naive
Bayes, a CART decision tree, and linear/quadratic discriminant analysis.

Every model exposes ``classes``, ``predict(X)`` and ``scores(X)``; the
score columns follow ``classes`` and are suitable for ROC analysis (vote
fractions, posterior probabilities or leaf class frequencies).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

KINDS = ("knn", "gaussian_nb", "cart", "lda", "qda")

VAR_FLOOR = 1e-9


class RegularizedCovarianceWarning(UserWarning):
    """A singular covariance matrix was regularised."""


def _check_xy(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y).ravel()
    if X.shape[0] != y.size:
        raise ValueError("X and y have different numbers of rows")
    if X.shape[0] == 0:
        raise ValueError("cannot fit on an empty training set")
    classes, yi = np.unique(y, return_inverse=True)
    return X, classes, yi


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sq_dists(A, B):
    d2 = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(d2, 0.0)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KNeighbors:
    """Majority vote of the ``k`` nearest training rows (Euclidean).

    Vote ties go to the tied class holding the single nearest neighbour.
    """

    classes: np.ndarray
    X: np.ndarray
    y: np.ndarray
    k: int = 5
    kind: str = "knn"

    @classmethod
    def fit(cls, X, y, k: int = 5):
        X, classes, yi = _check_xy(X, y)
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        return cls(classes, X.copy(), yi, int(min(k, X.shape[0])))

    def _neighbours(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        d2 = _sq_dists(X, self.X)
        idx = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return idx

    def scores(self, X):
        idx = self._neighbours(X)
        votes = np.zeros((idx.shape[0], self.classes.size))
        for col in range(self.k):
            votes[np.arange(idx.shape[0]), self.y[idx[:, col]]] += 1.0
        return votes / self.k

    def predict(self, X):
        idx = self._neighbours(X)
        L = self.classes.size
        votes = np.zeros((idx.shape[0], L))
        rank = np.full((idx.shape[0], L), np.inf)
        rows = np.arange(idx.shape[0])
        for col in range(self.k):
            lab = self.y[idx[:, col]]
            votes[rows, lab] += 1.0
            rank[rows, lab] = np.minimum(rank[rows, lab], col)
        top = votes == votes.max(axis=1, keepdims=True)
        return self.classes[np.argmin(np.where(top, rank, np.inf), axis=1)]


@dataclass(frozen=True)
class GaussianNB:
    """Independent per-feature normal likelihoods with class priors."""

    classes: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    priors: np.ndarray
    kind: str = "gaussian_nb"

    @classmethod
    def fit(cls, X, y, var_floor: float = VAR_FLOOR):
        X, classes, yi = _check_xy(X, y)
        means = np.array([X[yi == c].mean(axis=0) for c in range(classes.size)])
        var = np.array([X[yi == c].var(axis=0) for c in range(classes.size)])
        priors = np.bincount(yi, minlength=classes.size) / yi.size
        return cls(classes, means, np.maximum(var, var_floor), priors)

    def log_posterior(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        ll = -0.5 * (
            np.log(2.0 * np.pi * self.variances)[None, :, :]
            + (X[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :]
        ).sum(axis=2)
        return ll + np.log(self.priors)[None, :]

    def scores(self, X):
        return _softmax(self.log_posterior(X))

    def predict(self, X):
        return self.classes[np.argmax(self.log_posterior(X), axis=1)]


# ---------------------------------------------------------------------------
# CART


@dataclass(frozen=True)
class DecisionTree:
    """Binary tree grown greedily on Gini impurity.

    Node arrays: ``feature[i] == -1`` marks a leaf; otherwise rows with
    ``x[feature] <= threshold`` go to ``left[i]``.
    """

    classes: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    kind: str = "cart"

    @classmethod
    def fit(cls, X, y, max_depth: int = 12, min_samples_leaf: int = 2):
        X, classes, yi = _check_xy(X, y)
        L = classes.size
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(rows):
            counts = np.bincount(yi[rows], minlength=L).astype(np.float64)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(counts / counts.sum())
            return len(feature) - 1

        root = new_node(np.arange(yi.size))
        stack = [(root, np.arange(yi.size), 0)]
        while stack:
            node, rows, depth = stack.pop()
            if depth >= max_depth or rows.size < 2 * min_samples_leaf:
                continue
            ys = yi[rows]
            if np.all(ys == ys[0]):
                continue
            split = _best_gini_split(X[rows], ys, L, min_samples_leaf)
            if split is None:
                continue
            f, thr = split
            go_left = X[rows, f] <= thr
            lrows, rrows = rows[go_left], rows[~go_left]
            feature[node] = f
            threshold[node] = thr
            left[node] = new_node(lrows)
            right[node] = new_node(rrows)
            stack.append((right[node], rrows, depth + 1))
            stack.append((left[node], lrows, depth + 1))
        return cls(classes, np.array(feature), np.array(threshold), np.array(left),
                   np.array(right), np.array(value))

    def _leaf_index(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            n = node[active]
            go_left = X[active, self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return node

    def scores(self, X):
        return self.value[self._leaf_index(X)]

    def predict(self, X):
        return self.classes[np.argmax(self.scores(X), axis=1)]

    @property
    def depth(self) -> int:
        depth = np.zeros(self.feature.size, dtype=np.int64)
        for i in range(self.feature.size):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())


def _best_gini_split(X, y, L, min_leaf):
    n = y.size
    best = (np.inf, -1, 0.0)
    onehot = np.zeros((n, L))
    onehot[np.arange(n), y] = 1.0
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    valid_size = (nl >= min_leaf) & (nr >= min_leaf)
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = valid_size & (xs[1:] != xs[:-1])
        if not valid.any():
            continue
        cl = np.cumsum(onehot[order], axis=0)[:-1]
        cr = cl[-1] + onehot[order[-1]] - cl
        imp = (nl - (cl * cl).sum(axis=1) / nl) + (nr - (cr * cr).sum(axis=1) / nr)
        imp = np.where(valid, imp, np.inf)
        k = int(np.argmin(imp))
        if imp[k] < best[0] - 1e-12:
            best = (imp[k], f, 0.5 * (xs[k] + xs[k + 1]))
    if best[1] < 0:
        return None
    return best[1], best[2]


# ---------------------------------------------------------------------------
# Discriminant analysis


def _regularized(cov, name):
    """Return ``(cov, regularized)``, adding ``1e-6 * trace/dim`` when singular."""
    dim = cov.shape[0]
    try:
        np.linalg.cholesky(cov)
        if np.linalg.cond(cov) < 1e12:
            return cov, False
    except np.linalg.LinAlgError:
        pass
    ridge = 1e-6 * max(np.trace(cov), VAR_FLOOR * dim) / dim
    warnings.warn(f"{name}: singular covariance regularised with {ridge:.3e} on the diagonal",
                  RegularizedCovarianceWarning, stacklevel=3)
    return cov + ridge * np.eye(dim), True


@dataclass(frozen=True)
class LinearDiscriminant:
    """Shared (pooled within-class) covariance, class means and priors."""

    classes: np.ndarray
    means: np.ndarray
    covariance: np.ndarray
    priors: np.ndarray
    regularized: bool = False
    kind: str = "lda"
    _precision: np.ndarray = field(default=None, repr=False, compare=False)

    @classmethod
    def fit(cls, X, y):
        X, classes, yi = _check_xy(X, y)
        L = classes.size
        means = np.array([X[yi == c].mean(axis=0) for c in range(L)])
        resid = X - means[yi]
        dof = max(X.shape[0] - L, 1)
        cov = resid.T @ resid / dof
        cov, reg = _regularized(0.5 * (cov + cov.T), "lda")
        priors = np.bincount(yi, minlength=L) / yi.size
        return cls(classes, means, cov, priors, reg, "lda", np.linalg.inv(cov))

    def discriminants(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        P = self._precision if self._precision is not None else np.linalg.inv(self.covariance)
        W = self.means @ P
        return X @ W.T - 0.5 * np.sum(W * self.means, axis=1)[None, :] + np.log(self.priors)[None, :]

    def scores(self, X):
        return _softmax(self.discriminants(X))

    def predict(self, X):
        return self.classes[np.argmax(self.discriminants(X), axis=1)]


@dataclass(frozen=True)
class QuadraticDiscriminant:
    """Per-class covariance, mean and prior."""

    classes: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    priors: np.ndarray
    regularized: tuple = ()
    kind: str = "qda"

    @classmethod
    def fit(cls, X, y, var_floor: float = VAR_FLOOR):
        X, classes, yi = _check_xy(X, y)
        L = classes.size
        means, covs, regs = [], [], []
        for c in range(L):
            Xc = X[yi == c]
            mu = Xc.mean(axis=0)
            R = Xc - mu
            cov = R.T @ R / max(Xc.shape[0] - 1, 1)
            cov = 0.5 * (cov + cov.T)
            cov[np.diag_indices_from(cov)] = np.maximum(np.diag(cov), var_floor)
            cov, reg = _regularized(cov, f"qda class {classes[c].item()!r}")
            means.append(mu)
            covs.append(cov)
            regs.append(reg)
        priors = np.bincount(yi, minlength=L) / yi.size
        return cls(classes, np.array(means), np.array(covs), priors, tuple(regs))

    def discriminants(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty((X.shape[0], self.classes.size))
        for c in range(self.classes.size):
            chol = np.linalg.cholesky(self.covariances[c])
            z = np.linalg.solve(chol, (X - self.means[c]).T)
            logdet = 2.0 * np.sum(np.log(np.diag(chol)))
            out[:, c] = -0.5 * (z * z).sum(axis=0) - 0.5 * logdet + np.log(self.priors[c])
        return out

    def scores(self, X):
        return _softmax(self.discriminants(X))

    def predict(self, X):
        return self.classes[np.argmax(self.discriminants(X), axis=1)]


_FITTERS = {
    "knn": KNeighbors.fit,
    "gaussian_nb": GaussianNB.fit,
    "cart": DecisionTree.fit,
    "lda": LinearDiscriminant.fit,
    "qda": QuadraticDiscriminant.fit,
}


def baseline_train(kind: str, X, y, **hyperparams):
    """Fit a baseline classifier of the given ``kind``.

    Hyperparameters: ``k`` (knn, default 5); ``max_depth`` (default 12) and
    ``min_samples_leaf`` (default 2) for cart; ``var_floor`` (default 1e-9)
    for gaussian_nb and qda.
    """
    try:
        fitter = _FITTERS[kind]
    except KeyError:
        raise ValueError(f"unknown baseline kind {kind!r}; expected one of {KINDS}") from None
    return fitter(X, y, **hyperparams)


def baseline_predict(model, X):
    """Return ``(labels, scores)``."""
    return model.predict(X), model.scores(X)

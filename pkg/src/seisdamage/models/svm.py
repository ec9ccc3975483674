"""Soft-margin kernel SVM trained on the dual by sequential minimal
optimisation, and a one-vs-one multiclass wrapper.

The dual solved is

    maximise   W(a) = sum(a) - 1/2 sum_lm a_l a_m t_l t_m K(x_l, x_m)
    subject to sum(a * t) = 0,  0 <= a <= c

with a second-order working-pair choice (maximal violator ``i``, best
objective gain ``j``). Rows are visited in a seeded permutation so that
ties in the pair choice are broken reproducibly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .. import _accel
from .kernels import KernelSpec, gram


class ConvergenceError(RuntimeError):
    """SMO stopped at ``max_iter`` with the KKT gap still above ``tol``."""

    def __init__(self, gap: float, n_iter: int):
        super().__init__(f"SMO did not converge after {n_iter} iterations (KKT gap {gap:.3e})")
        self.gap = gap
        self.n_iter = n_iter


def dual_objective(alpha, t, K) -> float:
    """``sum(a) - 1/2 a' (t t' * K) a``."""
    alpha = np.asarray(alpha, dtype=np.float64)
    at = alpha * np.asarray(t, dtype=np.float64)
    return float(alpha.sum() - 0.5 * at @ K @ at)


@dataclass(frozen=True)
class BinarySvm:
    """Trained two-class machine; only support vectors (a_k > 0) are kept."""

    support_vectors: np.ndarray
    alpha: np.ndarray
    t: np.ndarray
    bias: float
    kernel: KernelSpec
    c: float
    tol: float = 1e-3
    n_iter: int = 0
    gap: float = 0.0

    def decision(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.support_vectors.shape[1]:
            raise ValueError(
                f"dimension mismatch: model has {self.support_vectors.shape[1]} features, got {X.shape[1]}"
            )
        K = gram(self.kernel, X, self.support_vectors)
        return K @ (self.alpha * self.t) + self.bias

    def predict(self, X) -> np.ndarray:
        """``+1`` where the decision value is >= 0, else ``-1``."""
        return np.where(self.decision(X) >= 0, 1, -1)


def _bias(alpha, t, grad, c):
    yg = t * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        return -float(np.mean(yg[free]))
    at_upper = alpha >= c
    # feasible interval for -b from the KKT conditions at the bounds
    to_ub = np.where(at_upper, t < 0, t > 0)
    ub = yg[to_ub].min() if to_ub.any() else np.inf
    lb = yg[~to_ub].max() if (~to_ub).any() else -np.inf
    if not np.isfinite(ub):
        ub = lb
    if not np.isfinite(lb):
        lb = ub
    return -float(0.5 * (ub + lb))


def svm_train_binary(X, t, kernel: KernelSpec, c: float = 1.0, tol: float = 1e-3,
                     max_iter: int = 10_000_000, seed: int = 0, return_full: bool = False):
    """Train a binary soft-margin SVM.

    Parameters
    ----------
    X : array, shape (n, d)
    t : array of +1/-1, shape (n,)
    kernel : KernelSpec
    c : float
        Box constraint on the multipliers.
    tol : float
        Stopping tolerance on the maximal KKT violation.
    max_iter : int
        Maximum number of pair updates.
    seed : int
        Seeds the visiting order of the rows.
    return_full : bool
        Also return the full multiplier vector in the input row order.

    Raises
    ------
    ValueError
        Only one label present, labels other than +-1, or ``c <= 0``.
    ConvergenceError
        The gap is still above ``tol`` after ``max_iter`` updates.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    t = np.asarray(t, dtype=np.float64).ravel()
    if X.shape[0] != t.size:
        raise ValueError("X and t have different numbers of rows")
    if not np.all(np.isin(t, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    if np.unique(t).size < 2:
        raise ValueError("both labels must be present to train a binary SVM")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    perm = np.random.default_rng(seed).permutation(t.size)
    Xp, tp = X[perm], t[perm]
    K = gram(kernel, Xp)
    Q = np.ascontiguousarray((tp[:, None] * tp[None, :]) * K)
    alpha_p, grad_p, n_iter, gap = _accel.smo_solve(Q, np.ascontiguousarray(tp), float(c), float(tol), int(max_iter))
    if gap >= tol:
        raise ConvergenceError(float(gap), int(n_iter))
    bias = _bias(alpha_p, tp, grad_p, c)
    alpha = np.empty_like(alpha_p)
    alpha[perm] = alpha_p
    sv = alpha > 0
    model = BinarySvm(X[sv].copy(), alpha[sv].copy(), t[sv].copy(), bias, kernel, float(c),
                      float(tol), int(n_iter), float(gap))
    if return_full:
        return model, alpha
    return model


def svm_decision(model: BinarySvm, X) -> np.ndarray:
    return model.decision(X)


def svm_predict(model: BinarySvm, X) -> np.ndarray:
    return model.predict(X)


@dataclass(frozen=True)
class MulticlassSvm:
    """One-vs-one ensemble over every unordered class pair.

    In the machine for ``(a, b)`` with ``a < b`` class ``a`` is ``+1``.
    Prediction is by majority vote; tied classes are separated by the
    larger sum of ``|decision|`` over the machines that voted for them,
    then by the lower class label.
    """

    classes: np.ndarray
    machines: dict = field(default_factory=dict)
    tie_rule: str = "votes>margin>lowest"

    def _votes(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        L = self.classes.size
        votes = np.zeros((X.shape[0], L))
        margin = np.zeros((X.shape[0], L))
        conf = np.zeros((X.shape[0], L))
        for (a, b), m in self.machines.items():
            d = m.decision(X)
            win_a = d >= 0
            votes[:, a] += win_a
            votes[:, b] += ~win_a
            margin[:, a] += np.where(win_a, np.abs(d), 0.0)
            margin[:, b] += np.where(win_a, 0.0, np.abs(d))
            conf[:, a] += d
            conf[:, b] -= d
        return votes, margin, conf

    def predict(self, X) -> np.ndarray:
        votes, margin, _ = self._votes(X)
        top = votes == votes.max(axis=1, keepdims=True)
        masked = np.where(top, margin, -np.inf)
        return self.classes[np.argmax(masked, axis=1)]

    def scores(self, X) -> np.ndarray:
        """Votes plus a bounded confidence term, one column per class."""
        votes, _, conf = self._votes(X)
        return votes + conf / (3.0 * (np.abs(conf) + 1.0))

    @property
    def n_machines(self) -> int:
        return len(self.machines)


def svm_train_multiclass(X, y, kernel: KernelSpec, c: float = 1.0, tol: float = 1e-3,
                         max_iter: int = 10_000_000, seed: int = 0, classes=None) -> MulticlassSvm:
    """Train ``L(L-1)/2`` pairwise machines.

    ``classes`` fixes the label set; every listed class must have rows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y).ravel()
    classes = np.unique(y) if classes is None else np.asarray(classes)
    for cl in classes:
        if not np.any(y == cl):
            raise ValueError(f"class {cl!r} has no rows")
    if classes.size < 2:
        raise ValueError("at least two classes are required")
    machines = {}
    for a, b in itertools.combinations(range(classes.size), 2):
        rows = (y == classes[a]) | (y == classes[b])
        t = np.where(y[rows] == classes[a], 1.0, -1.0)
        machines[(a, b)] = svm_train_binary(X[rows], t, kernel, c, tol, max_iter, seed)
    return MulticlassSvm(classes, machines)

"""Seeded k-fold partitioning."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of each row index to exactly one test fold."""

    k: int
    assignment: np.ndarray
    stratified: bool
    seed: int

    @property
    def n(self) -> int:
        return self.assignment.size

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def splits(self):
        """Yield ``(train, test)`` index arrays for every fold in order."""
        for f in range(self.k):
            yield self.train_indices(f), self.test_indices(f)


def kfold_plan(n: int, k: int, seed: int = 42, stratify_labels=None) -> FoldPlan:
    """Shuffle indices with ``seed`` and deal them round-robin into ``k`` folds.

    With ``stratify_labels`` the shuffle and deal happen per class, the deal
    continuing where the previous class stopped, so fold sizes differ by at
    most one overall and within each class.
    """
    n = int(n)
    k = int(k)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows n={n}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    if stratify_labels is None:
        order = rng.permutation(n)
        assignment[order] = np.arange(n) % k
        return FoldPlan(k, assignment, False, seed)
    labels = np.asarray(stratify_labels)
    if labels.shape != (n,):
        raise ValueError("stratify_labels must have length n")
    offset = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        assignment[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    return FoldPlan(k, assignment, True, seed)

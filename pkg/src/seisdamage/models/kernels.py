"""Kernel functions for the support vector machine.

``polynomial``  ``(tau + x.y) ** degree``
``rbf``         ``exp(-|x - y|^2 / (2 sigma^2))``
``gaussian_laplace``  ``exp(-gamma |x - y|)`` -- the Euclidean norm is
not squared, which makes this the exponential (Laplacian) kernel even
though it is commonly listed as "Gaussian".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FAMILIES = ("polynomial", "rbf", "gaussian_laplace")


@dataclass(frozen=True)
class KernelSpec:
    family: str
    tau: float = 1.0
    degree: int = 3
    sigma: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "polynomial":
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError(f"polynomial degree must be an integer >= 1, got {self.degree}")
            object.__setattr__(self, "degree", int(self.degree))
        if self.family == "rbf" and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.family == "gaussian_laplace" and not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def params(self) -> dict:
        if self.family == "polynomial":
            return {"tau": self.tau, "degree": self.degree}
        if self.family == "rbf":
            return {"sigma": self.sigma}
        return {"gamma": self.gamma}


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(d2, 0.0)


def gram(spec: KernelSpec, A, B=None) -> np.ndarray:
    """Kernel matrix ``K[i, j] = k(A[i], B[j])`` (``B`` defaults to ``A``)."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    same = B is None
    B = A if same else np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.family == "polynomial":
        K = (spec.tau + A @ B.T) ** spec.degree
    else:
        d2 = _sq_dists(A, B)
        if same:
            np.fill_diagonal(d2, 0.0)
        if spec.family == "rbf":
            K = np.exp(-d2 / (2.0 * spec.sigma ** 2))
        else:
            K = np.exp(-spec.gamma * np.sqrt(d2))
    if same:
        K = 0.5 * (K + K.T)
    return K


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Kernel value for a single pair of vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    if spec.family == "polynomial":
        return float((spec.tau + x @ y) ** spec.degree)
    diff = x - y
    if spec.family == "rbf":
        return float(np.exp(-(diff @ diff) / (2.0 * spec.sigma ** 2)))
    return float(np.exp(-spec.gamma * np.sqrt(diff @ diff)))


def default_kernel(family: str, X, tau: float = 1.0, degree: int = 3) -> KernelSpec:
    """Data-driven defaults: ``sigma = sqrt(median d^2 / 2)``, ``gamma = 1 / median d``.

    Medians run over all distinct pairs of rows of ``X``.
    """
    X = np.asarray(X, dtype=np.float64)
    if family == "polynomial":
        return KernelSpec("polynomial", tau=tau, degree=degree)
    iu = np.triu_indices(X.shape[0], k=1)
    d2 = _sq_dists(X, X)[iu]
    med2 = float(np.median(d2)) if d2.size else 1.0
    med = float(np.median(np.sqrt(d2))) if d2.size else 1.0
    if family == "rbf":
        return KernelSpec("rbf", sigma=np.sqrt(med2 / 2.0) if med2 > 0 else 1.0)
    return KernelSpec("gaussian_laplace", gamma=1.0 / med if med > 0 else 1.0)

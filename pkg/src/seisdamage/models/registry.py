"""Named model configurations, a uniform fit/predict interface, and a
versioned JSON format for fitted models.

Floats are written with ``repr`` (shortest round-trip form), so a loaded
model predicts bit-identically to the one that was saved.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .baselines import (DecisionTree, GaussianNB, KNeighbors, LinearDiscriminant,
                        QuadraticDiscriminant, baseline_train)
from .kernels import KernelSpec, default_kernel
from .svm import BinarySvm, MulticlassSvm, svm_train_multiclass

FORMAT_VERSION = 1

MODEL_NAMES = ("svm-polynomial", "svm-rbf", "svm-gaussian", "knn", "gaussian-nb", "cart", "lda", "qda")

DISPLAY_NAMES = {
    "svm-polynomial": "SVM - Polynomial Kernel",
    "svm-rbf": "SVM - RBF Kernel",
    "svm-gaussian": "SVM - Gaussian Kernel",
    "knn": "k-Neighbors Classifier",
    "gaussian-nb": "Naive Bayes",
    "cart": "Decision Tree Classifier",
    "lda": "Linear Discriminant Analysis",
    "qda": "Quadratic Discriminant Analysis",
}

_SVM_FAMILY = {"svm-polynomial": "polynomial", "svm-rbf": "rbf", "svm-gaussian": "gaussian_laplace"}
_BASELINE_KIND = {"knn": "knn", "gaussian-nb": "gaussian_nb", "cart": "cart", "lda": "lda", "qda": "qda"}

# hyperparameters accepted per model; None means "derive from training data"
DEFAULT_HYPERPARAMS = {
    "svm-polynomial": {"c": 1.0, "tau": 1.0, "degree": 3, "tol": 1e-3},
    "svm-rbf": {"c": 1.0, "sigma": None, "tol": 1e-3},
    "svm-gaussian": {"c": 1.0, "gamma": None, "tol": 1e-3},
    "knn": {"k": 5},
    "gaussian-nb": {"var_floor": 1e-9},
    "cart": {"max_depth": 12, "min_samples_leaf": 2},
    "lda": {},
    "qda": {"var_floor": 1e-9},
}

_INT_PARAMS = {"degree", "k", "max_depth", "min_samples_leaf"}


class UnknownModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """A model name plus hyperparameter overrides."""

    name: str
    hyperparams: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise UnknownModelError(f"unknown model {self.name!r}; expected one of {MODEL_NAMES}")
        allowed = DEFAULT_HYPERPARAMS[self.name]
        bad = sorted(set(self.hyperparams) - set(allowed))
        if bad:
            raise ValueError(f"{self.name}: unknown hyperparameter(s) {bad}; allowed {sorted(allowed)}")

    @property
    def display_name(self) -> str:
        return DISPLAY_NAMES[self.name]

    def resolved(self) -> dict:
        hp = dict(DEFAULT_HYPERPARAMS[self.name])
        for key, val in self.hyperparams.items():
            if val is not None:
                val = int(val) if key in _INT_PARAMS else float(val)
            hp[key] = val
        return hp


def fit_model(config: ModelConfig, X, y, seed: int = 0):
    """Fit the configured model; SVM kernel widths left as None are set
    from the median pairwise distance of ``X``."""
    hp = config.resolved()
    if config.name in _SVM_FAMILY:
        family = _SVM_FAMILY[config.name]
        if family == "polynomial":
            spec = KernelSpec("polynomial", tau=hp["tau"], degree=hp["degree"])
        elif family == "rbf":
            spec = default_kernel("rbf", X) if hp["sigma"] is None else KernelSpec("rbf", sigma=hp["sigma"])
        else:
            spec = (default_kernel("gaussian_laplace", X) if hp["gamma"] is None
                    else KernelSpec("gaussian_laplace", gamma=hp["gamma"]))
        return svm_train_multiclass(X, y, spec, c=hp["c"], tol=hp["tol"], seed=seed)
    return baseline_train(_BASELINE_KIND[config.name], X, y, **hp)


def predict_model(model, X):
    """Return ``(labels, scores)``; score columns follow ``model.classes``."""
    return model.predict(X), model.scores(X)


# ---------------------------------------------------------------------------
# serialization


def _enc(a):
    a = np.asarray(a)
    if a.dtype.kind == "f":
        return {"dtype": "float64", "shape": list(a.shape), "data": [repr(float(v)) for v in a.ravel()]}
    if a.dtype.kind in "iub":
        return {"dtype": "int64", "shape": list(a.shape), "data": [int(v) for v in a.ravel()]}
    raise TypeError(f"cannot serialise array of dtype {a.dtype}")


def _dec(d):
    if d["dtype"] == "float64":
        return np.array([float(v) for v in d["data"]], dtype=np.float64).reshape(d["shape"])
    return np.array(d["data"], dtype=np.int64).reshape(d["shape"])


def _kernel_to_dict(spec: KernelSpec) -> dict:
    return {"family": spec.family, "tau": repr(spec.tau), "degree": spec.degree,
            "sigma": repr(float(spec.sigma)), "gamma": repr(float(spec.gamma))}


def _kernel_from_dict(d) -> KernelSpec:
    return KernelSpec(d["family"], tau=float(d["tau"]), degree=int(d["degree"]),
                      sigma=float(d["sigma"]), gamma=float(d["gamma"]))


def _binary_to_dict(m: BinarySvm) -> dict:
    return {"support_vectors": _enc(m.support_vectors), "alpha": _enc(m.alpha), "t": _enc(m.t),
            "bias": repr(m.bias), "kernel": _kernel_to_dict(m.kernel), "c": repr(m.c),
            "tol": repr(m.tol), "n_iter": m.n_iter, "gap": repr(m.gap)}


def _binary_from_dict(d) -> BinarySvm:
    return BinarySvm(_dec(d["support_vectors"]), _dec(d["alpha"]), _dec(d["t"]), float(d["bias"]),
                     _kernel_from_dict(d["kernel"]), float(d["c"]), float(d["tol"]),
                     int(d["n_iter"]), float(d["gap"]))


def model_to_dict(model) -> dict:
    if isinstance(model, MulticlassSvm):
        body = {"machines": [{"pair": [a, b], **_binary_to_dict(m)}
                             for (a, b), m in sorted(model.machines.items())],
                "tie_rule": model.tie_rule}
        kind = "svm"
    elif isinstance(model, KNeighbors):
        body = {"X": _enc(model.X), "y": _enc(model.y), "k": model.k}
        kind = "knn"
    elif isinstance(model, GaussianNB):
        body = {"means": _enc(model.means), "variances": _enc(model.variances), "priors": _enc(model.priors)}
        kind = "gaussian_nb"
    elif isinstance(model, DecisionTree):
        body = {"feature": _enc(model.feature), "threshold": _enc(model.threshold),
                "left": _enc(model.left), "right": _enc(model.right), "value": _enc(model.value)}
        kind = "cart"
    elif isinstance(model, LinearDiscriminant):
        body = {"means": _enc(model.means), "covariance": _enc(model.covariance),
                "priors": _enc(model.priors), "regularized": model.regularized}
        kind = "lda"
    elif isinstance(model, QuadraticDiscriminant):
        body = {"means": _enc(model.means), "covariances": _enc(model.covariances),
                "priors": _enc(model.priors), "regularized": list(model.regularized)}
        kind = "qda"
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return {"kind": kind, "classes": _enc(model.classes), **body}


def model_from_dict(d):
    kind = d["kind"]
    classes = _dec(d["classes"])
    if kind == "svm":
        machines = {(int(m["pair"][0]), int(m["pair"][1])): _binary_from_dict(m) for m in d["machines"]}
        return MulticlassSvm(classes, machines, d["tie_rule"])
    if kind == "knn":
        return KNeighbors(classes, _dec(d["X"]), _dec(d["y"]), int(d["k"]))
    if kind == "gaussian_nb":
        return GaussianNB(classes, _dec(d["means"]), _dec(d["variances"]), _dec(d["priors"]))
    if kind == "cart":
        return DecisionTree(classes, _dec(d["feature"]), _dec(d["threshold"]), _dec(d["left"]),
                            _dec(d["right"]), _dec(d["value"]))
    if kind == "lda":
        cov = _dec(d["covariance"])
        return LinearDiscriminant(classes, _dec(d["means"]), cov, _dec(d["priors"]),
                                  bool(d["regularized"]), "lda", np.linalg.inv(cov))
    if kind == "qda":
        return QuadraticDiscriminant(classes, _dec(d["means"]), _dec(d["covariances"]),
                                     _dec(d["priors"]), tuple(bool(r) for r in d["regularized"]))
    raise ValueError(f"unknown serialised model kind {kind!r}")


def _norm_to_dict(norm) -> dict:
    return {"min": _enc(norm.min), "max": _enc(norm.max), "new_min": repr(float(norm.new_min)),
            "new_max": repr(float(norm.new_max)),
            "columns": None if norm.columns is None else list(norm.columns)}


def _norm_from_dict(d):
    from ..preprocess import NormalizationModel

    return NormalizationModel(_dec(d["min"]), _dec(d["max"]), float(d["new_min"]),
                              float(d["new_max"]),
                              None if d["columns"] is None else tuple(d["columns"]))


def dumps_model(model, config: ModelConfig | None = None, normalization=None, columns=None) -> str:
    """Serialise a fitted model (and optional normalization) to JSON text."""
    doc = {
        "format": "seisdamage-model",
        "version": FORMAT_VERSION,
        "config": None if config is None else {"name": config.name, "hyperparams": config.hyperparams},
        "columns": None if columns is None else list(columns),
        "normalization": None if normalization is None else _norm_to_dict(normalization),
        "model": model_to_dict(model),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def loads_model(text: str):
    """Inverse of :func:`dumps_model`; returns a dict with keys
    ``model``, ``config``, ``normalization`` and ``columns``."""
    doc = json.loads(text)
    if doc.get("format") != "seisdamage-model":
        raise ValueError("not a serialised seisdamage model")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')!r}")
    cfg = doc["config"]
    return {
        "model": model_from_dict(doc["model"]),
        "config": None if cfg is None else ModelConfig(cfg["name"], cfg["hyperparams"]),
        "normalization": None if doc["normalization"] is None else _norm_from_dict(doc["normalization"]),
        "columns": None if doc["columns"] is None else tuple(doc["columns"]),
    }

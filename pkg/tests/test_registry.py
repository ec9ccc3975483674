import warnings

import numpy as np
import pytest

from seisdamage.models.baselines import RegularizedCovarianceWarning
from seisdamage.models.registry import (DISPLAY_NAMES, MODEL_NAMES, ModelConfig, UnknownModelError,
                                        dumps_model, fit_model, loads_model, predict_model)
from seisdamage.preprocess import fit_minmax


def _data(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(c, 1.0, size=(25, 4)) for c in (0.0, 2.0, 4.0)])
    return X, np.repeat([0, 1, 2], 25)


def test_names():
    assert MODEL_NAMES == ("svm-polynomial", "svm-rbf", "svm-gaussian", "knn", "gaussian-nb",
                           "cart", "lda", "qda")
    assert DISPLAY_NAMES["svm-gaussian"] == "SVM - Gaussian Kernel"


def test_unknown_model_and_param():
    with pytest.raises(UnknownModelError):
        ModelConfig("forest")
    with pytest.raises(ValueError, match="sigma"):
        ModelConfig("knn", {"sigma": 1.0})


def test_resolved_types():
    hp = ModelConfig("svm-polynomial", {"degree": "2", "c": "10"}).resolved()
    assert hp["degree"] == 2 and isinstance(hp["degree"], int) and hp["c"] == 10.0


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_round_trip_predicts_identically(name):
    X, y = _data()
    cfg = ModelConfig(name)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegularizedCovarianceWarning)
        model = fit_model(cfg, X, y, seed=1)
    text = dumps_model(model, cfg, fit_minmax(X), ("a", "b", "c", "d"))
    doc = loads_model(text)
    Z = np.random.default_rng(9).normal(2.0, 2.0, size=(30, 4))
    l1, s1 = predict_model(model, Z)
    l2, s2 = predict_model(doc["model"], Z)
    assert np.array_equal(l1, l2)
    assert np.array_equal(s1, s2)
    assert doc["config"] == cfg
    assert doc["columns"] == ("a", "b", "c", "d")
    assert np.array_equal(doc["normalization"].min, X.min(axis=0))
    assert dumps_model(doc["model"], doc["config"], doc["normalization"], doc["columns"]) == text


def test_explicit_kernel_width_used():
    X, y = _data()
    m = fit_model(ModelConfig("svm-rbf", {"sigma": 0.25}), X, y)
    assert all(mm.kernel.sigma == 0.25 for mm in m.machines.values())


def test_version_checked():
    X, y = _data()
    text = dumps_model(fit_model(ModelConfig("knn"), X, y)).replace('"version": 1', '"version": 99')
    with pytest.raises(ValueError, match="version"):
        loads_model(text)

"""Kernel SVM, baseline classifiers and the model registry."""
from .baselines import baseline_predict, baseline_train
from .kernels import FAMILIES, KernelSpec, default_kernel, gram, kernel_eval
from .registry import (DISPLAY_NAMES, MODEL_NAMES, ModelConfig, dumps_model, fit_model,
                       loads_model, predict_model)
from .svm import (BinarySvm, ConvergenceError, MulticlassSvm, dual_objective, svm_decision,
                  svm_predict, svm_train_binary, svm_train_multiclass)

__all__ = [
    "FAMILIES", "KernelSpec", "kernel_eval", "gram", "default_kernel",
    "BinarySvm", "MulticlassSvm", "ConvergenceError", "dual_objective",
    "svm_train_binary", "svm_train_multiclass", "svm_decision", "svm_predict",
    "baseline_train", "baseline_predict",
    "MODEL_NAMES", "DISPLAY_NAMES", "ModelConfig", "fit_model", "predict_model",
    "dumps_model", "loads_model",
]

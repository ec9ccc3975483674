"""Seismic damage classification of reinforced-concrete buildings.

Ground-motion intensity measures from accelerograms, labeled feature
tables, preprocessing (Max-Min, IQR, PCA, PPS), a from-scratch kernel SVM
with simple baseline classifiers, and cross-validated evaluation.
"""
from ._accel import BACKEND
from .dataset import (ALL_COLUMNS, FEATURE_COLUMNS, DamageClass, FeatureRow, FeatureTable,
                      classify_damage, generate_synthetic, read_table, write_table)
from .evaluation import (ConfusionMatrix, MetricVector, class_prediction_error, cohen_kappa, confusion,
                         cross_validate, kfold_plan, mcc, roc_auc)
from .signal import (Accelerogram, IMConfig, IntensityMeasures, compute_intensity_measures,
                     compute_response_spectrum, load_accelerogram)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "Accelerogram", "IMConfig", "IntensityMeasures", "load_accelerogram",
    "compute_response_spectrum", "compute_intensity_measures",
    "ALL_COLUMNS", "FEATURE_COLUMNS", "DamageClass", "FeatureRow", "FeatureTable",
    "classify_damage", "generate_synthetic", "read_table", "write_table",
    "ConfusionMatrix", "MetricVector", "confusion", "cohen_kappa", "mcc", "roc_auc",
    "class_prediction_error", "kfold_plan", "cross_validate",
]

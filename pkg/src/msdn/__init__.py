"""Multi-label classification with a multi-scale 1-D convolution label stage.

Estimators follow the scikit-learn conventions (``fit`` / ``predict`` /
``predict_proba`` / ``get_params``) and take a feature matrix ``X`` of shape
``(n_samples, n_features)`` and a 0/1 label matrix ``Y`` of shape
``(n_samples, n_labels)``.
"""

__version__ = "0.1.0"

from .baselines import (
    BinaryRelevance,
    ClassifierChain,
    LogisticBase,
    ProbabilisticClassifierChain,
    StackedBinaryRelevance,
)
from .data import Dataset, MinMaxScaler, load_dataset, save_dataset, split, synth_xor
from .metrics import ema, micro_f1, paired_ttest
from .model import MSDNClassifier, param_count
from .serialization import load_model, save_model

__all__ = [
    "BinaryRelevance",
    "ClassifierChain",
    "Dataset",
    "LogisticBase",
    "MSDNClassifier",
    "MinMaxScaler",
    "ProbabilisticClassifierChain",
    "StackedBinaryRelevance",
    "ema",
    "load_dataset",
    "load_model",
    "micro_f1",
    "paired_ttest",
    "param_count",
    "save_dataset",
    "save_model",
    "split",
    "synth_xor",
]

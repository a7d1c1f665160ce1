"""Three classifiers over the (x1, x2) feature plane with one predict contract.

Score vectors are ordered by class code: (TurnRight, TurnLeft, Waggle).
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..errors import ShapeError
from ..features import FeatureTable, fit_standardizer
from ..signal import MoveLabel
from .base import TrainConfig, as_matrix, label_of, scale
from .logistic import LogisticModel, train_logistic
from .mlp import MlpModel, train_mlp
from .serialize import deserialize_model, serialize_model
from .svm import SvmRbfModel, train_svm_rbf

KINDS = ("logistic", "mlp", "svm")
# learners that get a standardizer fitted on their training rows
STANDARDIZED = frozenset({"mlp", "svm"})

_TRAINERS = {"logistic": train_logistic, "mlp": train_mlp, "svm": train_svm_rbf}


def fit_model(kind: str, table: FeatureTable, cfg: TrainConfig = TrainConfig()):
    """Train ``kind`` on ``table``; MLP and SVM models carry their own standardizer."""
    if kind not in _TRAINERS:
        raise ShapeError(f"unknown classifier kind {kind!r}")
    if kind in STANDARDIZED:
        scaler = fit_standardizer(table)
        model = _TRAINERS[kind](scaler.apply(table), cfg)
        return replace(model, scaler=scaler)
    return _TRAINERS[kind](table, cfg)


def predict_many(model, X) -> tuple[np.ndarray, np.ndarray]:
    """Label codes and score rows for a batch of feature rows."""
    Xm = scale(as_matrix(X), model.scaler)
    if isinstance(model, SvmRbfModel):
        scores, margins = model.votes_and_margins(Xm)
        cols = model.choose(scores, margins)
    else:
        scores = model.scores(Xm)
        cols = np.argmax(scores, axis=1)  # first maximum = lowest class code
    return cols - 1, scores


def predict(model, features) -> tuple[MoveLabel, np.ndarray]:
    codes, scores = predict_many(model, features)
    return MoveLabel(int(codes[0])), scores[0]


def svm_margins(model: SvmRbfModel, features) -> np.ndarray:
    """Summed one-vs-one decision values per class (the SVM tie-break)."""
    return model.votes_and_margins(scale(as_matrix(features), model.scaler))[1]


__all__ = [
    "KINDS",
    "LogisticModel",
    "MlpModel",
    "SvmRbfModel",
    "TrainConfig",
    "deserialize_model",
    "fit_model",
    "label_of",
    "predict",
    "predict_many",
    "serialize_model",
    "svm_margins",
    "train_logistic",
    "train_mlp",
    "train_svm_rbf",
]

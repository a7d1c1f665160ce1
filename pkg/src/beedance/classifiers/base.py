from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateLabels, InvalidConfig, InvalidInput, ShapeError
from ..features import FeatureTable, FeatureVector, Standardizer
from ..signal import CLASS_CODES, MoveLabel

N_CLASSES = 3
N_FEATURES = 2


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for all three learners. Fields irrelevant to a learner are ignored."""

    seed: int = 0
    logistic_lr: float = 0.1
    logistic_momentum: float = 0.0
    logistic_epochs: int = 10000
    l2_lambda: float = 1e-8
    grad_tol: float = 1e-6
    mlp_lr: float = 0.3
    mlp_momentum: float = 0.2
    mlp_epochs: int = 500
    C: float = 1.0
    gamma: float = 0.5
    tolerance: float = 1e-3
    max_passes: int = 10
    max_sweeps: int = 10000

    def __post_init__(self):
        for name in ("logistic_lr", "mlp_lr", "C", "gamma", "tolerance", "grad_tol"):
            if not getattr(self, name) > 0:
                raise InvalidConfig(f"{name} must be positive")
        for name in ("logistic_momentum", "mlp_momentum", "l2_lambda"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be non-negative")
        for name in ("logistic_epochs", "mlp_epochs", "max_passes", "max_sweeps", "seed"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be non-negative")


def training_arrays(table: FeatureTable) -> tuple[np.ndarray, np.ndarray]:
    """(X, class-column indices) with the usual training preconditions checked."""
    X = table.X
    if X.shape[0] == 0:
        raise DegenerateLabels("empty training table")
    if not np.all(np.isfinite(X)):
        raise InvalidInput("non-finite feature values")
    cols = table.y + 1
    if np.unique(cols).size < 2:
        raise DegenerateLabels("training needs at least two classes")
    return X, cols


def one_hot(cols: np.ndarray) -> np.ndarray:
    Y = np.zeros((cols.shape[0], N_CLASSES))
    Y[np.arange(cols.shape[0]), cols] = 1.0
    return Y


def present_mask(cols: np.ndarray) -> np.ndarray:
    return np.bincount(cols, minlength=N_CLASSES) > 0


def softmax(Z: np.ndarray) -> np.ndarray:
    """Row softmax; -inf logits get probability exactly 0."""
    Z = np.atleast_2d(Z)
    shifted = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(shifted)
    return E / E.sum(axis=1, keepdims=True)


def affine(X: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``X @ W.T + b`` summed term by term, so a row's result does not depend on batch size.

    BLAS picks different kernels (and summation orders) for one row than for
    many; prediction must give the same bits either way.
    """
    out = np.broadcast_to(b, (X.shape[0], W.shape[0])).copy()
    for k in range(W.shape[1]):
        out += X[:, k : k + 1] * W[:, k]
    return out


def mask_logits(Z: np.ndarray, present: np.ndarray) -> np.ndarray:
    return np.where(present, Z, -np.inf)


def as_matrix(features) -> np.ndarray:
    if isinstance(features, FeatureVector):
        X = features.as_array()[None, :]
    else:
        X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[1] != N_FEATURES:
        raise ShapeError(f"expected {N_FEATURES} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise InvalidInput("non-finite feature values")
    return X


def scale(X: np.ndarray, scaler: Standardizer | None) -> np.ndarray:
    return X if scaler is None else scaler.transform(X)


def label_of(col: int) -> MoveLabel:
    return MoveLabel(int(CLASS_CODES[col]))

"""Multinomial logistic regression, full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import FeatureTable, Standardizer
from .base import (
    N_CLASSES,
    N_FEATURES,
    TrainConfig,
    affine,
    mask_logits,
    one_hot,
    present_mask,
    softmax,
    training_arrays,
)


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray  # (3, 2), one row per class in code order
    bias: np.ndarray  # (3,)
    l2_lambda: float = 0.0
    present: np.ndarray = None  # classes seen in training; others get probability 0
    scaler: Standardizer | None = None

    kind = "logistic"

    def __post_init__(self):
        if self.present is None:
            object.__setattr__(self, "present", np.ones(N_CLASSES, dtype=bool))

    def logits(self, X: np.ndarray) -> np.ndarray:
        return mask_logits(affine(X, self.weights, self.bias), self.present)

    def scores(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.logits(X))


def loss_and_grad(W, b, X, Y, l2_lambda, present=None):
    """Mean cross-entropy plus (lambda/2)||W||^2, with gradients wrt W and b."""
    n = X.shape[0]
    Z = X @ W.T + b
    if present is not None:
        Z = mask_logits(Z, present)
    P = softmax(Z)
    with np.errstate(divide="ignore"):
        logp = np.log(np.where(Y > 0, P, 1.0))
    loss = -np.sum(Y * logp) / n + 0.5 * l2_lambda * np.sum(W * W)
    G = (P - Y) / n
    return loss, G.T @ X + l2_lambda * W, G.sum(axis=0)


def train_logistic(table: FeatureTable, cfg: TrainConfig = TrainConfig(), history: list | None = None) -> LogisticModel:
    """Zero-initialised gradient descent (so ``cfg.seed`` plays no role).

    Stops at ``cfg.logistic_epochs`` or when the gradient norm drops below
    ``cfg.grad_tol``. Per-epoch losses are appended to ``history`` if given.
    """
    X, cols = training_arrays(table)
    Y = one_hot(cols)
    present = present_mask(cols)
    W = np.zeros((N_CLASSES, N_FEATURES))
    b = np.zeros(N_CLASSES)
    vW = np.zeros_like(W)
    vb = np.zeros_like(b)
    lr, mu = cfg.logistic_lr, cfg.logistic_momentum
    for _ in range(cfg.logistic_epochs):
        loss, gW, gb = loss_and_grad(W, b, X, Y, cfg.l2_lambda, present)
        if history is not None:
            history.append(loss)
        if np.sqrt(np.sum(gW * gW) + np.sum(gb * gb)) < cfg.grad_tol:
            break
        vW = mu * vW - lr * gW
        vb = mu * vb - lr * gb
        W = W + vW
        b = b + vb
    return LogisticModel(W, b, cfg.l2_lambda, present)

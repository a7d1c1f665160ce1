"""2-3-3 feed-forward network: sigmoid hidden layer, softmax output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import FeatureTable, Standardizer
from .base import N_CLASSES, N_FEATURES, TrainConfig, affine, mask_logits, one_hot, present_mask, softmax, training_arrays

LAYER_SIZES = (N_FEATURES, 3, N_CLASSES)
INIT_RANGE = 0.5


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True, eq=False)
class MlpModel:
    w_hidden: np.ndarray  # (3, 2)
    b_hidden: np.ndarray  # (3,)
    w_out: np.ndarray  # (3, 3)
    b_out: np.ndarray  # (3,)
    present: np.ndarray = None
    scaler: Standardizer | None = None

    kind = "mlp"

    def __post_init__(self):
        if self.present is None:
            object.__setattr__(self, "present", np.ones(N_CLASSES, dtype=bool))

    def scores(self, X: np.ndarray) -> np.ndarray:
        H = sigmoid(affine(X, self.w_hidden, self.b_hidden))
        return softmax(mask_logits(affine(H, self.w_out, self.b_out), self.present))

    @property
    def params(self) -> tuple[np.ndarray, ...]:
        return self.w_hidden, self.b_hidden, self.w_out, self.b_out


def init_params(rng: np.random.Generator) -> list[np.ndarray]:
    h, o, i = LAYER_SIZES[1], LAYER_SIZES[2], LAYER_SIZES[0]
    u = lambda *shape: rng.uniform(-INIT_RANGE, INIT_RANGE, shape)
    return [u(h, i), u(h), u(o, h), u(o)]


def loss_and_grad(params, X, Y, present=None):
    """Mean cross-entropy and its gradient for every parameter array."""
    W1, b1, W2, b2 = params
    n = X.shape[0]
    H = sigmoid(X @ W1.T + b1)
    Z = H @ W2.T + b2
    if present is not None:
        Z = mask_logits(Z, present)
    P = softmax(Z)
    with np.errstate(divide="ignore"):
        logp = np.log(np.where(Y > 0, P, 1.0))
    loss = -np.sum(Y * logp) / n
    dZ = (P - Y) / n
    dH = (dZ @ W2) * H * (1.0 - H)
    return loss, [dH.T @ X, dH.sum(axis=0), dZ.T @ H, dZ.sum(axis=0)]


def train_mlp(table: FeatureTable, cfg: TrainConfig = TrainConfig(), epochs: int | None = None) -> MlpModel:
    X, cols = training_arrays(table)
    Y = one_hot(cols)
    present = present_mask(cols)
    params = init_params(np.random.default_rng(cfg.seed))
    velocity = [np.zeros_like(p) for p in params]
    lr, mu = cfg.mlp_lr, cfg.mlp_momentum
    for _ in range(cfg.mlp_epochs if epochs is None else epochs):
        _, grads = loss_and_grad(params, X, Y, present)
        for k, g in enumerate(grads):
            velocity[k] = mu * velocity[k] - lr * g
            params[k] = params[k] + velocity[k]
    return MlpModel(*params, present=present)

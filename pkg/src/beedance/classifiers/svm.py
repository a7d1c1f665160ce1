"""One-vs-one RBF support vector machine trained with SMO."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ..errors import ConvergenceFailure
from ..features import FeatureTable, Standardizer
from ..signal import CLASS_CODES
from .base import N_CLASSES, TrainConfig, training_arrays

PAIRS = tuple(combinations(range(N_CLASSES), 2))  # class columns; the first of a pair is the +1 side
ALPHA_EPS = 1e-8
STEP_EPS = 1e-5


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    d2 = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(d2, 0.0))


@dataclass(frozen=True, eq=False)
class BinarySvm:
    pair: tuple[int, int]
    support_vectors: np.ndarray  # (s, 2)
    dual_coef: np.ndarray  # alpha_i * y_i, (s,)
    bias: float

    def decision(self, X: np.ndarray, gamma: float) -> np.ndarray:
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        return rbf_kernel(X, self.support_vectors, gamma) @ self.dual_coef + self.bias


@dataclass(frozen=True, eq=False)
class SvmRbfModel:
    machines: tuple[BinarySvm, ...]
    gamma: float
    C: float
    scaler: Standardizer | None = None

    kind = "svm"

    def __post_init__(self):
        # all machines' support vectors stacked so prediction needs one kernel evaluation
        svs = [m.support_vectors.reshape(-1, 2) for m in self.machines]
        object.__setattr__(self, "_sv", np.vstack(svs) if svs else np.zeros((0, 2)))
        object.__setattr__(self, "_sv_sq", np.sum(self._sv * self._sv, axis=1))
        object.__setattr__(self, "_splits", np.cumsum([s.shape[0] for s in svs])[:-1])

    def decisions(self, X: np.ndarray) -> np.ndarray:
        """Decision value of every machine, shape (n, n_machines)."""
        # elementwise products and row sums only, so results do not depend on batch size
        cross = X[:, 0:1] * self._sv[:, 0] + X[:, 1:2] * self._sv[:, 1]
        d2 = (X[:, 0] * X[:, 0] + X[:, 1] * X[:, 1])[:, None] + self._sv_sq[None, :] - 2.0 * cross
        weighted = np.exp(-self.gamma * np.maximum(d2, 0.0))
        out = np.empty((X.shape[0], len(self.machines)))
        for k, (m, block) in enumerate(zip(self.machines, np.split(weighted, self._splits, axis=1))):
            out[:, k] = (block * m.dual_coef).sum(axis=1) + m.bias
        return out

    def votes_and_margins(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = X.shape[0]
        votes = np.zeros((n, N_CLASSES))
        margins = np.zeros((n, N_CLASSES))
        for k, f in enumerate(self.decisions(X).T):
            a, b = self.machines[k].pair
            pos = f >= 0.0
            votes[:, a] += pos
            votes[:, b] += ~pos
            margins[:, a] += f
            margins[:, b] -= f
        return votes, margins

    def scores(self, X: np.ndarray) -> np.ndarray:
        return self.votes_and_margins(X)[0]

    @staticmethod
    def choose(votes: np.ndarray, margins: np.ndarray) -> np.ndarray:
        """Winning class column per row: votes, then summed margins, then lowest code."""
        top = votes == votes.max(axis=1, keepdims=True)
        masked = np.where(top, margins, -np.inf)
        best = masked == masked.max(axis=1, keepdims=True)
        return np.argmax(best, axis=1)


@dataclass
class SmoResult:
    alpha: np.ndarray
    bias: float
    sweeps: int
    objective_trace: list = field(default_factory=list)


def dual_objective(alpha: np.ndarray, y: np.ndarray, K: np.ndarray) -> float:
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def smo(
    K: np.ndarray,
    y: np.ndarray,
    C: float,
    tol: float,
    max_passes: int,
    rng: np.random.Generator,
    max_sweeps: int = 10000,
    trace: bool = False,
    pair=None,
    on_update=None,
) -> SmoResult:
    """Simplified SMO on a precomputed kernel matrix, labels in {-1, +1}.

    A KKT-violating i is paired first with the j maximising |E_i - E_j|, then
    with the remaining rows in random order until some pair makes progress.
    Training stops after ``max_passes`` consecutive sweeps with no update.
    ``on_update(alpha)`` is called after every accepted pair update.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    bias = 0.0
    err = -y.astype(float)  # f(x_i) - y_i with alpha = 0, b = 0
    result = SmoResult(alpha, bias, 0)
    if trace:
        result.objective_trace.append(0.0)

    def take_step(i, j):
        nonlocal bias
        if i == j:
            return False
        ai, aj, yi, yj = alpha[i], alpha[j], y[i], y[j]
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - C), min(C, ai + aj)
        if lo >= hi:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0.0:
            return False
        Ei, Ej = err[i], err[j]
        aj_new = min(hi, max(lo, aj - yj * (Ei - Ej) / eta))
        if abs(aj_new - aj) < STEP_EPS:
            return False
        ai_new = min(C, max(0.0, ai + yi * yj * (aj - aj_new)))
        di, dj = ai_new - ai, aj_new - aj
        b1 = bias - Ei - yi * di * K[i, i] - yj * dj * K[i, j]
        b2 = bias - Ej - yi * di * K[i, j] - yj * dj * K[j, j]
        if 0.0 < ai_new < C:
            b_new = b1
        elif 0.0 < aj_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        err[:] += yi * di * K[:, i] + yj * dj * K[:, j] + (b_new - bias)
        alpha[i], alpha[j] = ai_new, aj_new
        bias = b_new
        if trace:
            result.objective_trace.append(dual_objective(alpha, y, K))
        if on_update is not None:
            on_update(alpha)
        return True

    passes = 0
    sweeps = 0
    while passes < max_passes:
        if sweeps >= max_sweeps:
            raise ConvergenceFailure(f"SMO did not converge in {max_sweeps} sweeps", pair=pair)
        changed = 0
        for i in range(n):
            r = y[i] * err[i]
            if (r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0.0):
                first = int(np.argmax(np.abs(err[i] - err)))
                if take_step(i, first):
                    changed += 1
                    continue
                for j in rng.permutation(n):
                    if j != first and take_step(i, int(j)):
                        changed += 1
                        break
        sweeps += 1
        passes = passes + 1 if changed == 0 else 0
    # refit the threshold on the unbounded multipliers
    free = (alpha > ALPHA_EPS) & (alpha < C - ALPHA_EPS)
    if free.any():
        f_wo_b = K[free] @ (alpha * y)
        bias = float(np.mean(y[free] - f_wo_b))
    result.alpha = alpha
    result.bias = float(bias)
    result.sweeps = sweeps
    return result


def train_binary(X, y, cfg: TrainConfig, rng, pair=None, trace=False) -> tuple[BinarySvm, SmoResult]:
    K = rbf_kernel(X, X, cfg.gamma)
    res = smo(K, y, cfg.C, cfg.tolerance, cfg.max_passes, rng, cfg.max_sweeps, trace=trace, pair=pair)
    keep = res.alpha > 0.0
    machine = BinarySvm(
        pair if pair is not None else (0, 1),
        X[keep].copy(),
        (res.alpha * y)[keep],
        res.bias,
    )
    return machine, res


def train_svm_rbf(table: FeatureTable, cfg: TrainConfig = TrainConfig()) -> SvmRbfModel:
    """Train one binary machine per pair of classes present in ``table``."""
    X, cols = training_arrays(table)
    rng = np.random.default_rng(cfg.seed)
    machines = []
    for a, b in PAIRS:
        mask = (cols == a) | (cols == b)
        if not (np.any(cols == a) and np.any(cols == b)):
            continue
        y = np.where(cols[mask] == a, 1.0, -1.0)
        pair_id = (int(CLASS_CODES[a]), int(CLASS_CODES[b]))
        machine, _ = train_binary(X[mask], y, cfg, rng, pair=pair_id)
        machines.append(BinarySvm((a, b), machine.support_vectors, machine.dual_coef, machine.bias))
    return SvmRbfModel(tuple(machines), cfg.gamma, cfg.C)

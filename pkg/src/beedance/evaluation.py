"""Stratified k-fold cross-validation and classification metrics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .classifiers import TrainConfig, fit_model, predict_many
from .errors import DegenerateFold, InvalidK, ParseError, ShapeError, TooFewRows
from .features import FeatureTable
from .signal import CLASS_CODES

N_CLASSES = len(CLASS_CODES)


def _codes(labels) -> np.ndarray:
    return np.array([int(v) for v in labels], dtype=int)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    seed: int
    assignment: np.ndarray  # row -> fold id

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def stratified_kfold(labels, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle each class with a seeded generator, then deal its rows round-robin.

    The dealing position carries over from one class to the next so fold
    sizes stay balanced overall, not just per class.
    """
    y = _codes(labels)
    if k < 2:
        raise InvalidK(f"k must be >= 2, got {k}")
    if y.shape[0] < k:
        raise TooFewRows(f"{y.shape[0]} rows cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.shape[0], dtype=int)
    pos = 0
    for code in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == code))
        assignment[idx] = (pos + np.arange(idx.shape[0])) % k
        pos = (pos + idx.shape[0]) % k
    return FoldPlan(k, seed, assignment)


@dataclass(eq=False)
class EvalReport:
    confusion: np.ndarray  # rows = truth, cols = predicted, class-code order
    accuracy: float
    f_weighted: float
    f_macro: float
    f1_per_class: np.ndarray
    fold_accuracies: list = field(default_factory=list)
    kind: str = ""
    dataset: str = ""
    config: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.confusion.sum())

    def to_text(self) -> str:
        lines = [
            f"kind={self.kind}",
            f"dataset={self.dataset}",
            f"n={self.n}",
            f"accuracy={self.accuracy:.17g}",
            f"f_weighted={self.f_weighted:.17g}",
            f"f_macro={self.f_macro:.17g}",
            "f1_per_class=" + " ".join(f"{v:.17g}" for v in self.f1_per_class),
            "confusion=" + ";".join(" ".join(str(int(v)) for v in row) for row in self.confusion),
            "fold_accuracies=" + " ".join(f"{v:.17g}" for v in self.fold_accuracies),
        ]
        lines.extend(f"config.{k}={v}" for k, v in sorted(self.config.items()))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EvalReport":
        kv = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            if "=" not in line:
                raise ParseError(f"line {lineno}: expected key=value", line=lineno)
            key, value = line.split("=", 1)
            kv[key] = value
        try:
            confusion = np.array([[int(v) for v in row.split()] for row in kv["confusion"].split(";")])
            report = cls(
                confusion=confusion,
                accuracy=float(kv["accuracy"]),
                f_weighted=float(kv["f_weighted"]),
                f_macro=float(kv["f_macro"]),
                f1_per_class=np.array([float(v) for v in kv["f1_per_class"].split()]),
                fold_accuracies=[float(v) for v in kv.get("fold_accuracies", "").split()],
                kind=kv.get("kind", ""),
                dataset=kv.get("dataset", ""),
                config={k[7:]: v for k, v in kv.items() if k.startswith("config.")},
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"malformed report: {exc}") from None
        if confusion.shape != (N_CLASSES, N_CLASSES):
            raise ParseError("confusion matrix must be 3x3")
        return report

    CSV_FIELDS = ("dataset", "kind", "n", "accuracy", "f_weighted", "f_macro", "fold_acc_mean", "fold_acc_sd")

    def csv_row(self) -> dict:
        folds = np.asarray(self.fold_accuracies, dtype=float)
        return {
            "dataset": self.dataset,
            "kind": self.kind,
            "n": self.n,
            "accuracy": f"{self.accuracy:.6f}",
            "f_weighted": f"{self.f_weighted:.6f}",
            "f_macro": f"{self.f_macro:.6f}",
            "fold_acc_mean": f"{folds.mean():.6f}" if folds.size else "",
            "fold_acc_sd": f"{folds.std(ddof=1):.6f}" if folds.size > 1 else "",
        }


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=EvalReport.CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def confusion_matrix(truth, predicted) -> np.ndarray:
    t = _codes(truth) + 1
    p = _codes(predicted) + 1
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    np.add.at(cm, (t, p), 1)
    return cm


def metrics_from_confusion(cm: np.ndarray) -> tuple[float, float, float, np.ndarray]:
    """(accuracy, weighted F1, macro F1, per-class F1); 0/0 counts as 0."""
    tp = np.diag(cm).astype(float)
    support = cm.sum(axis=1).astype(float)
    predicted = cm.sum(axis=0).astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2.0 * precision * recall / denom, 0.0)
    total = cm.sum()
    accuracy = float(tp.sum() / total)
    f_weighted = float(np.sum(f1 * support) / support.sum())
    f_macro = float(f1[support > 0].mean())
    return accuracy, f_weighted, f_macro, f1


def compute_metrics(truth, predicted) -> EvalReport:
    if len(truth) != len(predicted):
        raise ShapeError(f"truth has {len(truth)} labels, predicted has {len(predicted)}")
    if len(truth) == 0:
        raise ShapeError("no labels to score")
    cm = confusion_matrix(truth, predicted)
    acc, fw, fm, f1 = metrics_from_confusion(cm)
    return EvalReport(cm, acc, fw, fm, f1)


def cross_validate(
    table: FeatureTable,
    kind: str | Callable = "logistic",
    cfg: TrainConfig = TrainConfig(),
    k: int = 5,
    seed: int = 0,
    on_fold: Callable | None = None,
) -> EvalReport:
    """Stratified k-fold CV with one confusion matrix pooled over folds.

    ``kind`` is a classifier name or a ``(table, cfg) -> model`` callable.
    Standardizers (MLP, SVM) are fitted on each fold's training rows only.
    ``on_fold(fold, train_idx, test_idx, model)`` is called after each fold.
    """
    y = table.y
    plan = stratified_kfold(y, k, seed)
    classes = set(y.tolist())
    fit = (lambda t, c: fit_model(kind, t, c)) if isinstance(kind, str) else kind
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    fold_acc = []
    for fold in range(k):
        train_idx, test_idx = plan.train_indices(fold), plan.test_indices(fold)
        missing = classes - set(y[train_idx].tolist())
        if missing:
            raise DegenerateFold(f"fold {fold}: training rows lack class(es) {sorted(missing)}", fold=fold)
        model = fit(table.subset(train_idx), cfg)
        pred, _ = predict_many(model, table.X[test_idx])
        fold_cm = confusion_matrix(y[test_idx], pred)
        cm += fold_cm
        fold_acc.append(float(np.trace(fold_cm) / fold_cm.sum()))
        if on_fold is not None:
            on_fold(fold, train_idx, test_idx, model)
    acc, fw, fm, f1 = metrics_from_confusion(cm)
    name = kind if isinstance(kind, str) else getattr(kind, "__name__", "custom")
    return EvalReport(cm, acc, fw, fm, f1, fold_acc, name, config={"k": k, "seed": seed})


def seed_sweep(table, kind="logistic", cfg=TrainConfig(), k=5, seeds=range(10)):
    """CV accuracy over several fold seeds: (mean, sample sd, reports)."""
    reports = [cross_validate(table, kind, cfg, k, s) for s in seeds]
    accs = np.array([r.accuracy for r in reports])
    sd = float(accs.std(ddof=1)) if accs.size > 1 else 0.0
    return float(accs.mean()), sd, reports

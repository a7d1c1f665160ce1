"""The two per-interval features and the tables built from them.

x1: mean first difference of the trailing-3 average of cos(theta)
x2: maximum of that same averaged series
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInput, ShapeError, TooFewRows, TooShort
from .monitor import TriggerWindow, majority_label
from .signal import MoveLabel, Segment, Trajectory, check_tiling, first_difference, moving_average

FEATURE_WINDOW = 3
MIN_FEATURE_LEN = FEATURE_WINDOW + 2
STD_EPS = 1e-9


@dataclass(frozen=True)
class FeatureVector:
    x1: float
    x2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2])


def extract_features(theta_window, window: int = FEATURE_WINDOW) -> FeatureVector:
    theta = np.asarray(theta_window, dtype=float)
    if theta.shape[0] < window + 2:
        raise TooShort(f"feature extraction needs >= {window + 2} samples, got {theta.shape[0]}")
    return features_from_averaged(moving_average(np.cos(theta), window))


def features_from_averaged(ma_cos: np.ndarray) -> FeatureVector:
    """Features from an already-averaged cosine series (>= 2 values)."""
    steps = first_difference(ma_cos)
    # sum / count is what np.mean computes, minus its dispatch overhead
    return FeatureVector(float(steps.sum() / steps.shape[0]), float(ma_cos.max()))


def extract_features_many(windows: Sequence[np.ndarray], window: int = FEATURE_WINDOW) -> np.ndarray:
    """``extract_features`` over many angle windows at once, shape (n, 2).

    The cosine and the moving average are elementwise, so running them once
    over the concatenated windows and slicing gives bit-identical features.
    """
    if not windows:
        return np.zeros((0, 2))
    lengths = np.array([len(w) for w in windows])
    if lengths.min() < window + 2:
        raise TooShort(f"feature extraction needs >= {window + 2} samples, got {lengths.min()}")
    ma = moving_average(np.cos(np.concatenate(windows)), window)
    offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    out = np.empty((len(windows), 2))
    for k, (off, n) in enumerate(zip(offsets, lengths)):
        fv = features_from_averaged(ma[off : off + n - window + 1])
        out[k] = fv.x1, fv.x2
    return out


@dataclass(frozen=True)
class FeatureRow:
    features: FeatureVector
    label: MoveLabel | None
    bee_id: str
    segment_idx: int


@dataclass(frozen=True)
class FeatureTable:
    rows: tuple[FeatureRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        for r in self.rows:
            if not (np.isfinite(r.features.x1) and np.isfinite(r.features.x2)):
                raise InvalidInput(f"non-finite features in row {r.bee_id}/{r.segment_idx}")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def X(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, 2))
        return np.array([[r.features.x1, r.features.x2] for r in self.rows], dtype=float)

    @property
    def y(self) -> np.ndarray:
        """Label codes; raises if any row is unlabelled."""
        if any(r.label is None for r in self.rows):
            raise InvalidInput("table contains unlabelled rows")
        return np.array([int(r.label) for r in self.rows], dtype=int)

    @property
    def labels(self) -> list[MoveLabel | None]:
        return [r.label for r in self.rows]

    def subset(self, indices) -> "FeatureTable":
        return FeatureTable(tuple(self.rows[i] for i in indices))

    def with_features(self, X) -> "FeatureTable":
        X = np.asarray(X, dtype=float)
        if X.shape != (len(self.rows), 2):
            raise ShapeError(f"expected ({len(self.rows)}, 2) features, got {X.shape}")
        return FeatureTable(
            tuple(replace(r, features=FeatureVector(float(a), float(b))) for r, (a, b) in zip(self.rows, X))
        )

    @classmethod
    def from_arrays(cls, X, y=None, bee_id="", segment_idx=None) -> "FeatureTable":
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        seg = range(n) if segment_idx is None else segment_idx
        labels = [None] * n if y is None else [None if v is None else MoveLabel(int(v)) for v in y]
        return cls(
            tuple(FeatureRow(FeatureVector(float(a), float(b)), lab, bee_id, int(s)) for (a, b), lab, s in zip(X, labels, seg))
        )


def build_feature_table(trajectory: Trajectory, segments: Sequence[Segment], bee_id: str = "") -> FeatureTable:
    """One row per segment, labelled with the segment's majority ground truth."""
    if not check_tiling(segments, len(trajectory)):
        raise ShapeError("segments do not tile the trajectory")
    labelled = trajectory.has_labels
    rows = []
    for k, seg in enumerate(segments):
        if len(seg) < MIN_FEATURE_LEN:
            raise TooShort(f"segment {k} has {len(seg)} samples, need >= {MIN_FEATURE_LEN}")
        fv = extract_features(trajectory.theta[seg.start : seg.end])
        label = majority_label(trajectory.labels[seg.start : seg.end]) if labelled else None
        rows.append(FeatureRow(fv, label, bee_id, k))
    return FeatureTable(tuple(rows))


WINDOW_MODES = ("segment", "lookback")


def circuit_window(trig: TriggerWindow, mode: str = "segment") -> np.ndarray:
    """Angles the real-time circuit classifies when ``trig`` fires.

    ``lookback`` uses the whole buffer. ``segment`` keeps only the part of it
    after the previous event and before the trigger sample, i.e. the stretch
    the trigger closes, capped at the lookback length.
    """
    if mode == "lookback":
        return trig.theta
    if mode != "segment":
        raise ShapeError(f"unknown window mode {mode!r}")
    prev = 0 if trig.previous is None else trig.previous
    return trig.theta[max(prev - trig.start, 0) : -1]


def build_trigger_table(
    trajectory: Trajectory, triggers: Iterable[TriggerWindow], bee_id: str = "", mode: str = "segment"
) -> FeatureTable:
    """One row per trigger (the streaming circuit's view of the data).

    A trigger at index e is labelled with the majority ground truth of the
    stretch it closes, from the previous trigger (or 0) up to e. Triggers whose
    window is shorter than 5 samples get no row.
    """
    rows = []
    for k, trig in enumerate(triggers):
        window = circuit_window(trig, mode)
        if len(window) < MIN_FEATURE_LEN:
            continue
        e = trig.event.index
        prev = 0 if trig.previous is None else trig.previous
        label = majority_label(trajectory.labels[prev:e]) if trajectory.has_labels else None
        rows.append(FeatureRow(extract_features(window), label, bee_id, k))
    return FeatureTable(tuple(rows))


def pool_tables(*tables: FeatureTable) -> FeatureTable:
    rows = []
    for t in tables:
        rows.extend(t.rows)
    return FeatureTable(tuple(rows))


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def inverse(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.std + self.mean

    def apply(self, table: FeatureTable) -> FeatureTable:
        return table.with_features(self.transform(table.X))

    def invert(self, table: FeatureTable) -> FeatureTable:
        return table.with_features(self.inverse(table.X))


def fit_standardizer(table) -> Standardizer:
    X = table.X if isinstance(table, FeatureTable) else np.asarray(table, dtype=float)
    if X.shape[0] < 2:
        raise TooFewRows(f"standardizer needs >= 2 rows, got {X.shape[0]}")
    raw = X.std(axis=0, ddof=1)
    degenerate = raw < STD_EPS
    # anchor degenerate columns on an actual value so constants map to exactly 0
    mean = np.where(degenerate, X[0], X.mean(axis=0))
    return Standardizer(mean, np.where(degenerate, STD_EPS, raw))


def apply_standardizer(std: Standardizer, table: FeatureTable) -> FeatureTable:
    return std.apply(table)

"""Trajectory types and the causal windowed transforms everything else builds on."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyWindow, InvalidAngle, InvalidWindow, ShapeError, TooShort

DEFAULT_RATE_HZ = 30.0
DEFAULT_MIN_SEGMENT_LEN = 15

# int8 code for "no ground-truth label" in label arrays
NO_LABEL = -128


class MoveLabel(enum.IntEnum):
    """Dance move, valued by its dataset code."""

    TURN_RIGHT = -1
    TURN_LEFT = 0
    WAGGLE = 1

    @classmethod
    def from_code(cls, code) -> "MoveLabel":
        return cls(int(code))

    @property
    def code(self) -> int:
        return int(self.value)


# Class order used for every score vector: lowest code first.
CLASS_ORDER = (MoveLabel.TURN_RIGHT, MoveLabel.TURN_LEFT, MoveLabel.WAGGLE)
CLASS_CODES = np.array([c.code for c in CLASS_ORDER])


def class_index(label) -> int:
    """Column of ``label`` in a length-3 score vector."""
    return int(label) + 1


def normalize_angle(theta):
    """Wrap angles into (-pi, pi]. Works on scalars and arrays."""
    arr = np.asarray(theta, dtype=float)
    out = arr - 2.0 * np.pi * np.ceil((arr - np.pi) / (2.0 * np.pi))
    # guard the two ends against rounding
    out = np.where(out <= -np.pi, out + 2.0 * np.pi, out)
    out = np.where(out > np.pi, out - 2.0 * np.pi, out)
    if np.ndim(theta) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Sample:
    index: int
    x: float
    y: float
    theta: float
    label: MoveLabel | None = None

    def __post_init__(self):
        if self.index < 0:
            raise ShapeError(f"negative sample index {self.index}")
        if not math.isfinite(self.theta):
            raise InvalidAngle(f"non-finite theta at index {self.index}", index=self.index)
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidAngle(f"non-finite position at index {self.index}", index=self.index)


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A contiguous 0-indexed run of samples, stored column-wise.

    ``labels`` holds dataset codes (-1, 0, 1) or ``NO_LABEL``.
    """

    theta: np.ndarray
    x: np.ndarray
    y: np.ndarray
    labels: np.ndarray
    rate_hz: float = DEFAULT_RATE_HZ
    name: str = field(default="", compare=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        n = theta.shape[0] if theta.ndim == 1 else -1
        if n < 0:
            raise ShapeError("theta must be one-dimensional")
        bad = np.flatnonzero(~np.isfinite(theta))
        if bad.size:
            raise InvalidAngle(f"non-finite theta at index {bad[0]}", index=int(bad[0]))
        for col in ("x", "y", "labels"):
            if np.shape(getattr(self, col)) != (n,):
                raise ShapeError(f"column {col!r} has shape {np.shape(getattr(self, col))}, expected ({n},)")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise InvalidAngle("non-finite body coordinates")
        labels = np.asarray(self.labels)
        ok = np.isin(labels, (-1, 0, 1, NO_LABEL))
        if not ok.all():
            raise ShapeError(f"invalid label code at index {int(np.flatnonzero(~ok)[0])}")
        if self.rate_hz <= 0:
            raise ShapeError("rate_hz must be positive")
        object.__setattr__(self, "theta", _frozen(normalize_angle(theta) if n else theta, float))
        object.__setattr__(self, "x", _frozen(self.x, float))
        object.__setattr__(self, "y", _frozen(self.y, float))
        object.__setattr__(self, "labels", _frozen(labels, np.int8))

    @classmethod
    def from_arrays(cls, theta, x=None, y=None, labels=None, rate_hz=DEFAULT_RATE_HZ, name=""):
        theta = np.asarray(theta, dtype=float)
        n = len(theta)
        x = np.zeros(n) if x is None else x
        y = np.zeros(n) if y is None else y
        if labels is None:
            labels = np.full(n, NO_LABEL, dtype=np.int8)
        else:
            labels = np.array([NO_LABEL if v is None else int(v) for v in labels], dtype=np.int8)
        return cls(theta=theta, x=x, y=y, labels=labels, rate_hz=rate_hz, name=name)

    @classmethod
    def from_samples(cls, samples: Iterable[Sample], rate_hz=DEFAULT_RATE_HZ, name=""):
        samples = list(samples)
        for expected, s in enumerate(samples):
            if s.index != expected:
                raise ShapeError(f"sample indices must run 0, 1, 2, ...; got {s.index} at position {expected}")
        return cls.from_arrays(
            [s.theta for s in samples],
            [s.x for s in samples],
            [s.y for s in samples],
            [s.label for s in samples],
            rate_hz=rate_hz,
            name=name,
        )

    def __len__(self) -> int:
        return int(self.theta.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.rate_hz == other.rate_hz and all(
            np.array_equal(getattr(self, c), getattr(other, c)) for c in ("theta", "x", "y", "labels")
        )

    __hash__ = None

    def sample(self, i: int) -> Sample:
        code = int(self.labels[i])
        return Sample(
            index=i,
            x=float(self.x[i]),
            y=float(self.y[i]),
            theta=float(self.theta[i]),
            label=None if code == NO_LABEL else MoveLabel(code),
        )

    @property
    def samples(self) -> list[Sample]:
        return [self.sample(i) for i in range(len(self))]

    @property
    def has_labels(self) -> bool:
        return bool(np.any(self.labels != NO_LABEL))


@dataclass(frozen=True)
class Segment:
    """Half-open sample interval ``[start, end)`` carrying one move label."""

    start: int
    end: int
    label: MoveLabel | None = None

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise ShapeError(f"bad segment bounds [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start


def check_tiling(segments: Sequence[Segment], length: int) -> bool:
    """True when ``segments`` are contiguous, non-overlapping and cover ``[0, length)``."""
    if not segments:
        return length == 0
    if segments[0].start != 0 or segments[-1].end != length:
        return False
    return all(a.end == b.start for a, b in zip(segments, segments[1:]))


def moving_average(series, window: int) -> np.ndarray:
    """Trailing mean: ``out[i] = mean(series[i : i + window])``.

    Output element ``i`` sits at input index ``i + window - 1``. The window
    terms are summed oldest first so a streaming consumer that sums its ring
    buffer in the same order reproduces these values bit for bit.
    """
    if window < 1:
        raise InvalidWindow(f"window must be >= 1, got {window}")
    s = np.asarray(series, dtype=float)
    n = s.shape[0]
    if n < window:
        raise EmptyWindow(f"series of length {n} is shorter than window {window}")
    m = n - window + 1
    acc = s[0:m].copy()
    for k in range(1, window):
        acc += s[k : k + m]
    if window > 1:
        acc /= window
    return acc


def first_difference(series) -> np.ndarray:
    s = np.asarray(series, dtype=float)
    if s.shape[0] < 2:
        raise TooShort(f"first difference needs >= 2 values, got {s.shape[0]}")
    return s[1:] - s[:-1]


def trig_lift(trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise (sin theta, cos theta) of a trajectory or raw angle array."""
    theta = trajectory.theta if isinstance(trajectory, Trajectory) else np.asarray(trajectory, dtype=float)
    if theta.shape[0] == 0:
        raise TooShort("empty trajectory")
    bad = np.flatnonzero(~np.isfinite(theta))
    if bad.size:
        raise InvalidAngle(f"non-finite theta at index {bad[0]}", index=int(bad[0]))
    return np.sin(theta), np.cos(theta)

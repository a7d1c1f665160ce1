"""Threshold monitor on the trailing average of sin(theta).

The batch path (``monitoring_series`` -> ``detect_events`` -> ``segment_trajectory``)
and the streaming path (``MonitorState``) share one crossing rule and one
moving-average summation order, so they report identical event indices.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, OutOfOrder, TooShort
from .signal import (
    DEFAULT_MIN_SEGMENT_LEN,
    NO_LABEL,
    MoveLabel,
    Sample,
    Segment,
    Trajectory,
    moving_average,
    trig_lift,
)


class Direction(enum.Enum):
    DOWNWARD = "down"  # m drops below the threshold
    UPWARD = "up"  # m returns to >= threshold


@dataclass(frozen=True)
class MonitorConfig:
    window: int = 3
    threshold: float = -0.7
    refractory: int = DEFAULT_MIN_SEGMENT_LEN
    lookback: int = 90
    min_segment_len: int = DEFAULT_MIN_SEGMENT_LEN

    def __post_init__(self):
        if self.window < 1:
            raise InvalidConfig(f"window must be >= 1, got {self.window}")
        if not -1.0 <= self.threshold <= 1.0:
            raise InvalidConfig(f"threshold must lie in [-1, 1], got {self.threshold}")
        if self.refractory < 1:
            raise InvalidConfig(f"refractory must be >= 1, got {self.refractory}")
        if self.lookback < self.window + 2:
            raise InvalidConfig(f"lookback must be >= window + 2 = {self.window + 2}, got {self.lookback}")
        if self.min_segment_len < 1:
            raise InvalidConfig(f"min_segment_len must be >= 1, got {self.min_segment_len}")


@dataclass(frozen=True)
class CrossingEvent:
    index: int
    direction: Direction


def monitoring_series(trajectory, config: MonitorConfig = MonitorConfig()) -> np.ndarray:
    """Trailing ``config.window`` average of sin(theta); element i sits at input index i + window - 1."""
    sin_theta, _ = trig_lift(trajectory)
    return moving_average(sin_theta, config.window)


def _next_true(mask: np.ndarray) -> np.ndarray:
    """``out[i]`` = smallest j >= i with mask[j], or len(mask) if none."""
    n = mask.shape[0]
    idx = np.where(mask, np.arange(n), n)
    return np.minimum.accumulate(idx[::-1])[::-1]


def _scan(m: np.ndarray, first_index: int, threshold: float, refractory: int, below: bool, last_event):
    """Run the crossing rule over ``m`` whose element 0 sits at input index ``first_index``.

    ``below`` and ``last_event`` are the carried-in state. Returns the events and
    the carried-out state. Only event positions are visited in Python.
    """
    n = m.shape[0]
    events = []
    if n == 0:
        return events, below, last_event
    is_below = m < threshold
    next_below = _next_true(is_below)
    next_above = _next_true(~is_below)
    pos = 0
    while True:
        if last_event is not None:
            pos = max(pos, last_event + refractory - first_index)
        if pos >= n:
            break
        j = int(next_above[pos] if below else next_below[pos])
        if j >= n:
            break
        idx = first_index + j
        events.append(CrossingEvent(idx, Direction.UPWARD if below else Direction.DOWNWARD))
        below = not below
        last_event = idx
        pos = j + 1
    return events, below, last_event


def detect_events(monitor_series, config: MonitorConfig = MonitorConfig()) -> list[CrossingEvent]:
    """Alternating threshold crossings of a monitoring series, in input coordinates.

    Downward fires where m < threshold, Upward where m >= threshold afterwards.
    After any event, the next one may fire no sooner than ``refractory`` samples later.
    """
    m = np.asarray(monitor_series, dtype=float)
    events, _, _ = _scan(m, config.window - 1, config.threshold, config.refractory, False, None)
    return events


def _merge_boundaries(events: list[int], length: int, min_len: int) -> list[int]:
    out = [0]
    for b in events:
        if b <= out[-1] or b >= length:
            continue
        if b - out[-1] < min_len:
            if len(out) == 1:
                continue  # short first segment merges forward
            out[-1] = b  # short segment merges into its predecessor
        else:
            out.append(b)
    if length - out[-1] < min_len and len(out) > 1:
        out[-1] = length
    else:
        out.append(length)
    return out


def majority_label(codes) -> MoveLabel | None:
    """Most frequent label code, ties broken toward Waggle, then TurnLeft."""
    codes = np.asarray(codes)
    codes = codes[codes != NO_LABEL]
    if codes.size == 0:
        return None
    counts = {c: int(np.count_nonzero(codes == c.code)) for c in MoveLabel}
    preference = (MoveLabel.WAGGLE, MoveLabel.TURN_LEFT, MoveLabel.TURN_RIGHT)
    return max(preference, key=lambda c: (counts[c], -preference.index(c)))


def segments_from_events(
    events, length: int, min_segment_len: int = DEFAULT_MIN_SEGMENT_LEN, labels=None
) -> list[Segment]:
    """Cut ``[0, length)`` at every event index, then merge short pieces."""
    indices = [e.index if isinstance(e, CrossingEvent) else int(e) for e in events]
    bounds = _merge_boundaries(sorted(indices), length, min_segment_len)
    segs = []
    for a, b in zip(bounds, bounds[1:]):
        label = majority_label(labels[a:b]) if labels is not None else None
        segs.append(Segment(a, b, label))
    return segs


def segment_trajectory(trajectory: Trajectory, config: MonitorConfig = MonitorConfig()) -> list[Segment]:
    """Tile a trajectory with segments bounded by monitor events.

    Segments carry the majority ground-truth label when the trajectory is labelled.
    """
    events = detect_events(monitoring_series(trajectory, config), config)
    labels = trajectory.labels if trajectory.has_labels else None
    return segments_from_events(events, len(trajectory), config.min_segment_len, labels)


# -- streaming ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TriggerWindow:
    """Lookback buffer handed out when the monitor fires.

    ``theta`` ends at (and includes) ``event.index``. ``previous`` is the index of
    the event before this one (None for the first). ``samples`` is filled by
    the per-sample path; the block path leaves it empty.
    """

    event: CrossingEvent
    theta: np.ndarray
    previous: int | None = None
    samples: tuple = ()

    @property
    def start(self) -> int:
        return self.event.index - len(self.theta) + 1

    def __len__(self) -> int:
        return len(self.theta)


@dataclass(eq=False)
class MonitorState:
    """Mutable state of one streaming monitor. One instance per bee stream."""

    config: MonitorConfig = field(default_factory=MonitorConfig)
    next_index: int = 0
    last_event: int | None = None
    below: bool = False
    window_sum: float = 0.0
    buffer: deque = field(init=False)
    _sin_window: deque = field(init=False)

    def __post_init__(self):
        self.buffer = deque(maxlen=self.config.lookback)
        self._sin_window = deque(maxlen=self.config.window)

    @property
    def armed(self) -> bool:
        return self.last_event is None or self.next_index >= self.last_event + self.config.refractory

    @property
    def min_trigger_len(self) -> int:
        return self.config.window + 2

    def step(self, sample: Sample) -> TriggerWindow | None:
        if sample.index != self.next_index:
            raise OutOfOrder(f"expected sample index {self.next_index}, got {sample.index}")
        cfg = self.config
        self.buffer.append(sample)
        self._sin_window.append(math.sin(sample.theta))
        # exact re-sum each step, oldest first, matching moving_average
        self.window_sum = sum(self._sin_window)
        idx = self.next_index
        fired = None
        if len(self._sin_window) == cfg.window and self.armed:
            m = self.window_sum / cfg.window if cfg.window > 1 else self.window_sum
            if self.below and m >= cfg.threshold:
                fired = CrossingEvent(idx, Direction.UPWARD)
            elif not self.below and m < cfg.threshold:
                fired = CrossingEvent(idx, Direction.DOWNWARD)
        self.next_index += 1
        if fired is None:
            return None
        previous = self.last_event
        self.below = not self.below
        self.last_event = idx
        samples = tuple(self.buffer)
        return TriggerWindow(fired, np.array([s.theta for s in samples]), previous, samples)

    def feed(self, theta_block) -> list[TriggerWindow]:
        """Push a block of consecutive angles; vectorized equivalent of repeated ``step``.

        Samples pushed this way enter the lookback buffer with zero body
        coordinates and no label.
        """
        block = np.asarray(theta_block, dtype=float)
        if block.ndim != 1:
            raise TooShort("theta block must be one-dimensional")
        cfg = self.config
        g0 = self.next_index
        tail_sin = np.fromiter(self._sin_window, float, len(self._sin_window))
        tail_theta = np.fromiter((s.theta for s in self.buffer), float, len(self.buffer))
        full_sin = np.concatenate([tail_sin, np.sin(block)])
        full_theta = np.concatenate([tail_theta, block])
        theta_origin = g0 - len(tail_theta)
        triggers = []
        if full_sin.shape[0] >= cfg.window:
            m = moving_average(full_sin, cfg.window)
            first = g0 - len(tail_sin) + cfg.window - 1
            # rows of m already evaluated by earlier steps are skipped
            skip = max(0, g0 - first)
            previous = self.last_event
            events, self.below, self.last_event = _scan(
                m[skip:], first + skip, cfg.threshold, cfg.refractory, self.below, self.last_event
            )
            for ev in events:
                stop = ev.index - theta_origin + 1
                start = max(0, stop - cfg.lookback)
                triggers.append(TriggerWindow(ev, full_theta[start:stop].copy(), previous))
                previous = ev.index
        self.next_index = g0 + block.shape[0]
        keep = full_theta[-cfg.lookback :]
        first_kept = self.next_index - keep.shape[0]
        self.buffer.clear()
        self.buffer.extend(Sample(first_kept + i, 0.0, 0.0, float(t)) for i, t in enumerate(keep))
        self._sin_window.clear()
        self._sin_window.extend(full_sin[-cfg.window :].tolist())
        self.window_sum = sum(self._sin_window)
        return triggers


def stream_step(state: MonitorState, sample: Sample) -> TriggerWindow | None:
    """Push one sample; return the lookback window if the monitor fires on it."""
    return state.step(sample)


def stream_events(trajectory: Trajectory, config: MonitorConfig = MonitorConfig()) -> list[TriggerWindow]:
    """Replay a whole trajectory through ``stream_step``."""
    state = MonitorState(config)
    out = []
    for i in range(len(trajectory)):
        trig = state.step(trajectory.sample(i))
        if trig is not None:
            out.append(trig)
    return out

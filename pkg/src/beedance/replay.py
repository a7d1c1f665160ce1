"""Real-time circuit: monitor, then extract and classify whenever it fires."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .classifiers import predict_many
from .features import MIN_FEATURE_LEN, circuit_window, extract_features, extract_features_many
from .monitor import MonitorConfig, MonitorState, TriggerWindow, detect_events, monitoring_series
from .signal import MoveLabel, Trajectory

BLOCK = 1 << 16
_LABELS = {int(m): m for m in MoveLabel}


@dataclass(frozen=True)
class ReplayEvent:
    index: int
    direction: str
    label: MoveLabel | None  # None when the window was too short to extract features
    scores: tuple
    latency_us: float  # feature extraction + classification


@dataclass
class ReplayResult:
    events: list = field(default_factory=list)
    n_samples: int = 0
    elapsed_s: float = 0.0

    @property
    def throughput(self) -> float:
        return self.n_samples / self.elapsed_s if self.elapsed_s > 0 else float("inf")

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "direction", "label", "score_turn_right", "score_turn_left", "score_waggle", "latency_us"])
        for e in self.events:
            scores = [format(s, ".17g") for s in e.scores] if e.scores else ["", "", ""]
            w.writerow([e.index, e.direction, "" if e.label is None else int(e.label), *scores, f"{e.latency_us:.1f}"])


def classify_trigger(model, trig: TriggerWindow, mode: str = "segment") -> ReplayEvent:
    """Extract and classify one trigger, timing it on the monotonic clock."""
    t0 = time.perf_counter_ns()
    window = circuit_window(trig, mode)
    if len(window) < MIN_FEATURE_LEN:
        label, scores = None, ()
    else:
        codes, rows = predict_many(model, extract_features(window).as_array())
        label, scores = MoveLabel(int(codes[0])), tuple(float(s) for s in rows[0])
    latency = (time.perf_counter_ns() - t0) / 1000.0
    return ReplayEvent(trig.event.index, trig.event.direction.value, label, scores, latency)


def classify_batch(model, triggers, mode: str = "segment") -> list[ReplayEvent]:
    """Classify a block's triggers with one predict call; latency is the per-trigger share."""
    if not triggers:
        return []
    t0 = time.perf_counter_ns()
    windows = [circuit_window(t, mode) for t in triggers]
    ok = [i for i, w in enumerate(windows) if len(w) >= MIN_FEATURE_LEN]
    codes = rows = None
    if ok:
        F = extract_features_many([windows[i] for i in ok])
        codes, rows = predict_many(model, F)
    share = (time.perf_counter_ns() - t0) / 1000.0 / len(triggers)
    out = []
    slot = {i: k for k, i in enumerate(ok)}
    labels = [_LABELS[c] for c in codes.tolist()] if ok else []
    score_rows = rows.tolist() if ok else []
    for i, trig in enumerate(triggers):
        if i in slot:
            k = slot[i]
            label, scores = labels[k], tuple(score_rows[k])
        else:
            label, scores = None, ()
        out.append(ReplayEvent(trig.event.index, trig.event.direction.value, label, scores, share))
    return out


def replay_stream(
    trajectory: Trajectory,
    model,
    config: MonitorConfig = MonitorConfig(),
    target_rate: float | None = None,
    mode: str = "segment",
    block: int = BLOCK,
) -> ReplayResult:
    """Drive the circuit over a recorded trajectory.

    With ``target_rate`` set, samples go through ``stream_step`` one at a time,
    paced to that rate on the monotonic clock, and each trigger is classified
    as it fires. With ``target_rate=None`` (max speed) the trajectory is pushed
    in blocks through ``MonitorState.feed`` and each block's triggers are
    classified together.
    """
    state = MonitorState(config)
    result = ReplayResult(n_samples=len(trajectory))
    start = time.perf_counter()
    if target_rate is None:
        theta = trajectory.theta
        for lo in range(0, len(theta), block):
            result.events.extend(classify_batch(model, state.feed(theta[lo : lo + block]), mode))
    else:
        period = 1.0 / target_rate
        for i in range(len(trajectory)):
            wait = start + i * period - time.perf_counter()
            if wait > 0:
                time.sleep(wait)
            trig = state.step(trajectory.sample(i))
            if trig is not None:
                result.events.append(classify_trigger(model, trig, mode))
    result.elapsed_s = time.perf_counter() - start
    return result


def offline_trigger_windows(trajectory: Trajectory, config: MonitorConfig = MonitorConfig()) -> list[TriggerWindow]:
    """The trigger windows the streaming circuit emits, computed in batch."""
    out = []
    previous = None
    for ev in detect_events(monitoring_series(trajectory, config), config):
        lo = max(0, ev.index - config.lookback + 1)
        out.append(TriggerWindow(ev, np.array(trajectory.theta[lo : ev.index + 1]), previous))
        previous = ev.index
    return out

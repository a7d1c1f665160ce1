"""Seeded synthetic waggle dances with exact ground truth.

A dance repeats [waggle, turn right, waggle, turn left]. During a waggle run
the heading holds the waggle axis plus a square-wave shake; a turn sweeps the
heading at constant rate once around the circle and lands back on the axis
(clockwise for right turns, counterclockwise for left).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .errors import InvalidSpec
from .signal import DEFAULT_MIN_SEGMENT_LEN, DEFAULT_RATE_HZ, MoveLabel, Segment, Trajectory

MIN_PHASE_LEN = DEFAULT_MIN_SEGMENT_LEN + 5
_CYCLE = (MoveLabel.WAGGLE, MoveLabel.TURN_RIGHT, MoveLabel.WAGGLE, MoveLabel.TURN_LEFT)


@dataclass(frozen=True)
class DanceSpec:
    waggle_axis: float = 0.0
    waggle_len: int = 60
    turn_len: int = 26
    n_cycles: int = 3
    waggle_osc_amplitude: float = 0.3
    waggle_osc_freq: float = 13.0
    heading_noise_sd: float = 0.05
    rate_hz: float = DEFAULT_RATE_HZ
    seed: int = 0

    def validate(self) -> "DanceSpec":
        if self.waggle_len < MIN_PHASE_LEN or self.turn_len < MIN_PHASE_LEN:
            raise InvalidSpec(f"waggle_len and turn_len must be >= {MIN_PHASE_LEN}")
        if self.n_cycles < 1:
            raise InvalidSpec("n_cycles must be >= 1")
        if self.rate_hz <= 0 or self.waggle_osc_freq < 0:
            raise InvalidSpec("rate_hz must be positive and waggle_osc_freq non-negative")
        if self.heading_noise_sd < 0 or self.waggle_osc_amplitude < 0:
            raise InvalidSpec("noise and amplitude must be non-negative")
        if not all(math.isfinite(float(getattr(self, f.name))) for f in fields(self)):
            raise InvalidSpec("spec fields must be finite")
        if self.seed < 0:
            raise InvalidSpec("seed must be non-negative")
        return self


def _wrap(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def _waggle(spec: DanceSpec) -> np.ndarray:
    t = np.arange(spec.waggle_len) / spec.rate_hz
    square = np.where(np.sin(2.0 * np.pi * spec.waggle_osc_freq * t) >= 0.0, 1.0, -1.0)
    return spec.waggle_axis + spec.waggle_osc_amplitude * square


def _turn(spec: DanceSpec, exit_heading: float, clockwise: bool) -> np.ndarray:
    # signed gap from exit heading back to the axis; the sweep covers one loop minus it
    gap = _wrap(spec.waggle_axis - exit_heading)
    frac = np.arange(1, spec.turn_len + 1) / spec.turn_len
    if clockwise:
        return exit_heading - (2.0 * np.pi - gap) * frac
    return exit_heading + (2.0 * np.pi + gap) * frac


def generate_dance(spec: DanceSpec = DanceSpec()) -> tuple[Trajectory, list[Segment]]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    pieces, segments = [], []
    pos = 0
    for _ in range(spec.n_cycles):
        exit_heading = spec.waggle_axis
        for move in _CYCLE:
            if move is MoveLabel.WAGGLE:
                piece = _waggle(spec)
            else:
                piece = _turn(spec, exit_heading, clockwise=move is MoveLabel.TURN_RIGHT)
            exit_heading = float(piece[-1])
            pieces.append(piece)
            segments.append(Segment(pos, pos + len(piece), move))
            pos += len(piece)
    clean = np.concatenate(pieces)
    theta = clean + rng.normal(0.0, spec.heading_noise_sd, clean.shape) if spec.heading_noise_sd > 0 else clean
    labels = np.empty(pos, dtype=np.int8)
    for seg in segments:
        labels[seg.start : seg.end] = seg.label.code
    # unit speed along the heading
    x = np.cumsum(np.cos(theta)) / spec.rate_hz
    y = np.cumsum(np.sin(theta)) / spec.rate_hz
    traj = Trajectory(theta=theta, x=x, y=y, labels=labels, rate_hz=spec.rate_hz)
    return traj, segments


# Per-dance ranges for the default corpus; axes stay near 0 so the -0.7 threshold applies.
DEFAULT_RANGES = {
    "waggle_axis": (-0.15, 0.15),
    "waggle_len": (45, 75),
    "turn_len": (26, 32),
    "n_cycles": (2, 4),
    "heading_noise_sd": (0.05, 0.05),
}

_INT_FIELDS = {"waggle_len", "turn_len", "n_cycles"}


def generate_corpus(n_dances: int, ranges=None, seed: int = 0) -> list[tuple[DanceSpec, Trajectory, list[Segment]]]:
    """Draw ``n_dances`` specs uniformly from ``ranges`` and generate each dance.

    ``ranges`` maps DanceSpec field names to inclusive (low, high) pairs;
    unspecified fields keep their defaults.
    """
    if n_dances < 1:
        raise InvalidSpec("n_dances must be >= 1")
    ranges = DEFAULT_RANGES if ranges is None else ranges
    known = {f.name for f in fields(DanceSpec)} - {"seed"}
    for key, bounds in ranges.items():
        if key not in known:
            raise InvalidSpec(f"unknown spec field {key!r}")
        if len(bounds) != 2 or bounds[0] > bounds[1]:
            raise InvalidSpec(f"empty range for {key!r}: {bounds}")
    children = np.random.SeedSequence(seed).spawn(n_dances)
    corpus = []
    for child in children:
        rng = np.random.default_rng(child)
        values = {}
        for key, (lo, hi) in ranges.items():
            values[key] = int(rng.integers(lo, hi + 1)) if key in _INT_FIELDS else float(rng.uniform(lo, hi))
        dance_seed = int(child.generate_state(1)[0])
        spec = replace(DanceSpec(), seed=dance_seed, **values).validate()
        traj, segs = generate_dance(spec)
        corpus.append((spec, traj, segs))
    return corpus


def spec_to_dict(spec: DanceSpec) -> dict:
    return asdict(spec)

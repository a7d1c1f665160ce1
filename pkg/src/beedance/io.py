"""CSV readers and writers for trajectories, segments and feature tables."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import GapError, InvalidLabel, ParseError
from .features import FeatureRow, FeatureTable, FeatureVector
from .signal import DEFAULT_RATE_HZ, NO_LABEL, MoveLabel, Segment, Trajectory

TRAJECTORY_HEADER = ["index", "x", "y", "theta", "label"]
SEGMENT_HEADER = ["segment_idx", "start", "end", "label"]
FEATURE_HEADER = ["bee_id", "segment_idx", "x1", "x2", "label"]


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def _label_text(label) -> str:
    return "" if label is None else str(int(label))


def _parse_label(text: str, lineno: int):
    text = text.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise InvalidLabel(f"line {lineno}: label {text!r} is not a number", line=lineno) from None
    if value not in (-1.0, 0.0, 1.0):
        raise InvalidLabel(f"line {lineno}: label {text!r} not in {{-1, 0, 1}}", line=lineno)
    return MoveLabel(int(value))


def _check_header(header, expected, path):
    if header is None:
        raise ParseError(f"{path}: empty file", line=1)
    if [h.strip() for h in header] != expected:
        raise ParseError(f"{path}: expected header {','.join(expected)}", line=1)


def load_trajectory(path, degrees: bool = False, rate_hz: float = DEFAULT_RATE_HZ) -> Trajectory:
    """Read ``index,x,y,theta,label`` rows. Indices must be consecutive; they are re-based to 0."""
    path = Path(path)
    thetas, xs, ys, labels = [], [], [], []
    first = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        _check_header(next(reader, None), TRAJECTORY_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 fields, got {len(row)}", line=lineno)
            try:
                idx = int(row[0])
                x, y, theta = float(row[1]), float(row[2]), float(row[3])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed number", line=lineno) from None
            if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(theta)):
                raise ParseError(f"{path}:{lineno}: non-finite value", line=lineno)
            expected = idx if first is None else first + len(thetas)
            if first is None:
                if idx < 0:
                    raise ParseError(f"{path}:{lineno}: negative index", line=lineno)
                first = idx
            if idx != expected:
                raise GapError(f"{path}:{lineno}: index {idx} follows {expected - 1}")
            label = _parse_label(row[4], lineno)
            thetas.append(math.radians(theta) if degrees else theta)
            xs.append(x)
            ys.append(y)
            labels.append(NO_LABEL if label is None else label.code)
    return Trajectory(
        theta=np.array(thetas),
        x=np.array(xs),
        y=np.array(ys),
        labels=np.array(labels, dtype=np.int8),
        rate_hz=rate_hz,
        name=path.stem,
    )


def write_trajectory(trajectory: Trajectory, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for i in range(len(trajectory)):
            code = int(trajectory.labels[i])
            w.writerow(
                [
                    i,
                    fmt(trajectory.x[i]),
                    fmt(trajectory.y[i]),
                    fmt(trajectory.theta[i]),
                    "" if code == NO_LABEL else code,
                ]
            )


def write_segments(segments, path_or_file) -> None:
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SEGMENT_HEADER)
        for k, s in enumerate(segments):
            w.writerow([k, s.start, s.end, _label_text(s.label)])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with Path(path_or_file).open("w", newline="") as fh:
            _write(fh)


def load_segments(path) -> list[Segment]:
    path = Path(path)
    segs = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        _check_header(next(reader, None), SEGMENT_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 fields", line=lineno)
            try:
                start, end = int(row[1]), int(row[2])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed bounds", line=lineno) from None
            segs.append(Segment(start, end, _parse_label(row[3], lineno)))
    return segs


def write_features(table: FeatureTable, path_or_file) -> None:
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_HEADER)
        for r in table.rows:
            w.writerow([r.bee_id, r.segment_idx, fmt(r.features.x1), fmt(r.features.x2), _label_text(r.label)])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with Path(path_or_file).open("w", newline="") as fh:
            _write(fh)


def load_features(path) -> FeatureTable:
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        _check_header(next(reader, None), FEATURE_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"{path}:{lineno}: expected 5 fields", line=lineno)
            try:
                seg = int(row[1])
                x1, x2 = float(row[2]), float(row[3])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed number", line=lineno) from None
            if not (math.isfinite(x1) and math.isfinite(x2)):
                raise ParseError(f"{path}:{lineno}: non-finite feature", line=lineno)
            rows.append(FeatureRow(FeatureVector(x1, x2), _parse_label(row[4], lineno), row[0], seg))
    return FeatureTable(tuple(rows))

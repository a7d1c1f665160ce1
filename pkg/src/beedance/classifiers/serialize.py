"""Versioned text model files.

    waggle-model v1 <kind>
    key=value
    [block-name rows cols]
    <rows lines of cols numbers>
    ...
    end

Floats are written with 17 significant digits, which round-trips IEEE doubles.
"""

from __future__ import annotations

import numpy as np

from ..errors import ParseError, UnsupportedVersion
from ..features import Standardizer
from .logistic import LogisticModel
from .mlp import MlpModel
from .svm import BinarySvm, SvmRbfModel

MAGIC = "waggle-model"
VERSION = 1
KINDS = ("logistic", "mlp", "svm")


def _num(v: float) -> str:
    return format(float(v), ".17g")


class _Writer:
    def __init__(self, kind):
        self.lines = [f"{MAGIC} v{VERSION} {kind}"]

    def scalar(self, key, value):
        if isinstance(value, (list, tuple, np.ndarray)):
            value = " ".join(_num(v) if isinstance(v, float) else str(int(v)) for v in value)
        elif isinstance(value, float):
            value = _num(value)
        self.lines.append(f"{key}={value}")

    def block(self, name, arr):
        arr = np.atleast_2d(np.asarray(arr, dtype=float))
        if arr.size == 0:
            arr = arr.reshape(0, arr.shape[-1] if arr.ndim == 2 else 0)
        self.lines.append(f"[{name} {arr.shape[0]} {arr.shape[1]}]")
        self.lines.extend(" ".join(_num(v) for v in row) for row in arr)

    def done(self) -> bytes:
        self.lines.append("end")
        return ("\n".join(self.lines) + "\n").encode("utf-8")


def _write_common(w: _Writer, model):
    if getattr(model, "present", None) is not None:
        w.scalar("present", [int(v) for v in model.present])
    if model.scaler is not None:
        w.block("scaler", np.vstack([model.scaler.mean, model.scaler.std]))


def serialize_model(model) -> bytes:
    w = _Writer(model.kind)
    if isinstance(model, LogisticModel):
        w.scalar("l2_lambda", float(model.l2_lambda))
        _write_common(w, model)
        w.block("weights", model.weights)
        w.block("bias", model.bias[None, :])
    elif isinstance(model, MlpModel):
        w.scalar("layers", [2, 3, 3])
        _write_common(w, model)
        w.block("w_hidden", model.w_hidden)
        w.block("b_hidden", model.b_hidden[None, :])
        w.block("w_out", model.w_out)
        w.block("b_out", model.b_out[None, :])
    elif isinstance(model, SvmRbfModel):
        w.scalar("gamma", float(model.gamma))
        w.scalar("C", float(model.C))
        w.scalar("machines", len(model.machines))
        _write_common(w, model)
        for k, m in enumerate(model.machines):
            w.scalar(f"machine{k}.pair", list(m.pair))
            w.scalar(f"machine{k}.bias", float(m.bias))
            w.block(f"machine{k}.sv", m.support_vectors.reshape(-1, 2))
            w.block(f"machine{k}.coef", m.dual_coef.reshape(-1, 1))
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return w.done()


class _Parsed:
    def __init__(self, kind, scalars, blocks, end_offset):
        self.kind = kind
        self.scalars = scalars
        self.blocks = blocks
        self.end_offset = end_offset

    def scalar(self, key):
        if key not in self.scalars:
            raise ParseError(f"missing key {key!r}", offset=self.end_offset)
        return self.scalars[key]

    def number(self, key) -> float:
        text, off = self.scalar(key)
        try:
            return float(text)
        except ValueError:
            raise ParseError(f"bad number for {key!r}", offset=off) from None

    def ints(self, key) -> list[int]:
        text, off = self.scalar(key)
        try:
            return [int(t) for t in text.split()]
        except ValueError:
            raise ParseError(f"bad integers for {key!r}", offset=off) from None

    def block(self, key, shape=None) -> np.ndarray:
        if key not in self.blocks:
            raise ParseError(f"missing block {key!r}", offset=self.end_offset)
        arr, off = self.blocks[key]
        if shape is not None and arr.shape != shape:
            raise ParseError(f"block {key!r} has shape {arr.shape}, expected {shape}", offset=off)
        return arr


def _parse(data: bytes) -> _Parsed:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("model file is not UTF-8", offset=exc.start) from None
    lines = []
    offset = 0
    for raw in text.splitlines(keepends=True):
        lines.append((raw.rstrip("\r\n"), offset))
        offset += len(raw.encode("utf-8"))
    if not lines:
        raise ParseError("empty model file", offset=0)
    head = lines[0][0].split()
    if len(head) != 3 or head[0] != MAGIC or not head[1].startswith("v"):
        raise ParseError("missing model header", offset=0)
    try:
        version = int(head[1][1:])
    except ValueError:
        raise ParseError("bad version field", offset=0) from None
    if version != VERSION:
        raise UnsupportedVersion(f"model file version {version}; this build reads v{VERSION}")
    kind = head[2]
    if kind not in KINDS:
        raise ParseError(f"unknown model kind {kind!r}", offset=0)
    scalars, blocks = {}, {}
    i = 1
    while i < len(lines):
        line, off = lines[i]
        if line == "end":
            return _Parsed(kind, scalars, blocks, off)
        if line.startswith("["):
            parts = line.strip("[]").split()
            if len(parts) != 3 or not line.endswith("]"):
                raise ParseError("bad block header", offset=off)
            name = parts[0]
            try:
                rows, cols = int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError("bad block dimensions", offset=off) from None
            arr = np.empty((rows, cols))
            for r in range(rows):
                i += 1
                if i >= len(lines):
                    raise ParseError(f"truncated block {name!r}", offset=offset)
                row_text, row_off = lines[i]
                vals = row_text.split()
                if len(vals) != cols:
                    raise ParseError(f"block {name!r} row {r} has {len(vals)} values", offset=row_off)
                try:
                    arr[r] = [float(v) for v in vals]
                except ValueError:
                    raise ParseError(f"bad number in block {name!r}", offset=row_off) from None
            blocks[name] = (arr, off)
        elif "=" in line:
            key, value = line.split("=", 1)
            scalars[key.strip()] = (value.strip(), off)
        else:
            raise ParseError("unrecognised line", offset=off)
        i += 1
    raise ParseError("truncated model file (no 'end' line)", offset=offset)


def _common(p: _Parsed):
    present = np.array(p.ints("present"), dtype=bool) if "present" in p.scalars else None
    if present is not None and present.shape != (3,):
        raise ParseError("present must list 3 flags", offset=p.scalars["present"][1])
    scaler = None
    if "scaler" in p.blocks:
        s = p.block("scaler", (2, 2))
        scaler = Standardizer(s[0].copy(), s[1].copy())
    return present, scaler


def deserialize_model(data: bytes):
    p = _parse(data)
    present, scaler = _common(p)
    if p.kind == "logistic":
        return LogisticModel(
            p.block("weights", (3, 2)), p.block("bias", (1, 3))[0], p.number("l2_lambda"), present, scaler
        )
    if p.kind == "mlp":
        if p.ints("layers") != [2, 3, 3]:
            raise ParseError("only 2-3-3 networks are supported", offset=p.scalars["layers"][1])
        return MlpModel(
            p.block("w_hidden", (3, 2)),
            p.block("b_hidden", (1, 3))[0],
            p.block("w_out", (3, 3)),
            p.block("b_out", (1, 3))[0],
            present,
            scaler,
        )
    machines = []
    for k in range(int(p.number("machines"))):
        pair = p.ints(f"machine{k}.pair")
        sv = p.block(f"machine{k}.sv")
        coef = p.block(f"machine{k}.coef")
        if len(pair) != 2 or sv.shape[1] != 2 or coef.shape != (sv.shape[0], 1):
            raise ParseError(f"inconsistent machine {k}", offset=p.blocks[f"machine{k}.sv"][1])
        machines.append(BinarySvm(tuple(pair), sv, coef[:, 0].copy(), p.number(f"machine{k}.bias")))
    return SvmRbfModel(tuple(machines), p.number("gamma"), p.number("C"), scaler)

"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence error.
Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import __version__
from .classifiers import KINDS, TrainConfig, fit_model, predict_many, serialize_model, deserialize_model
from .errors import BeeDanceError, ParseError, UsageError
from .evaluation import EvalReport, cross_validate, reports_to_csv, seed_sweep
from .features import WINDOW_MODES, build_feature_table, build_trigger_table, pool_tables
from .io import load_features, load_segments, load_trajectory, write_features, write_segments, write_trajectory
from .monitor import MonitorConfig, segment_trajectory
from .replay import offline_trigger_windows, replay_stream
from .synth import DEFAULT_RANGES, generate_corpus

REPORT_SEPARATOR = "---\n"

_MONITOR_KEYS = {f.name: f.type for f in fields(MonitorConfig)}
_TRAIN_KEYS = {f.name: f.type for f in fields(TrainConfig)}
_RUN_KEYS = {"k": "int", "kind": "str", "degrees": "bool", "window_mode": "str"}


@dataclass(frozen=True)
class RunConfig:
    monitor: MonitorConfig = MonitorConfig()
    train: TrainConfig = TrainConfig()
    k: int = 5
    seed: int = 0
    kind: str = "logistic"
    degrees: bool = False
    window_mode: str = "segment"


def _cast(key: str, text: str, type_name: str):
    type_name = str(type_name)
    try:
        if "bool" in type_name:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in type_name:
            return int(text)
        if "float" in type_name:
            return float(text)
    except ValueError:
        raise UsageError(f"config value for {key!r} is not a valid {type_name}: {text!r}") from None
    return text


def read_config_file(path) -> dict:
    """key=value lines; '#' starts a comment."""
    known = {**_MONITOR_KEYS, **_TRAIN_KEYS, **_RUN_KEYS}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected key=value", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = _cast(key, value, known[key])
    return out


def build_run_config(args) -> RunConfig:
    """Merge flags > config file > defaults."""
    from_file = read_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(key):
        value = getattr(args, key, None)
        return from_file.get(key) if value is None else value

    monitor = {k: pick(k) for k in _MONITOR_KEYS if pick(k) is not None}
    train = {k: pick(k) for k in _TRAIN_KEYS if pick(k) is not None}
    run = {k: pick(k) for k in _RUN_KEYS if pick(k) is not None}
    if run.get("kind") not in (None, *KINDS, "all"):
        raise UsageError(f"unknown classifier kind {run['kind']!r}")
    if run.get("window_mode") not in (None, *WINDOW_MODES):
        raise UsageError(f"unknown window mode {run['window_mode']!r}")
    train_cfg = TrainConfig(**train)
    return RunConfig(
        monitor=MonitorConfig(**monitor),
        train=train_cfg,
        seed=train_cfg.seed,
        **run,
    )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _add_monitor_flags(p):
    g = p.add_argument_group("monitor")
    g.add_argument("--window", type=int, help="moving-average window (default 3)")
    g.add_argument("--threshold", type=float, help="crossing threshold (default -0.7)")
    g.add_argument("--refractory", type=int, help="minimum samples between events (default 15)")
    g.add_argument("--lookback", type=int, help="trigger buffer length in samples (default 90)")
    g.add_argument("--min-segment-len", dest="min_segment_len", type=int, help="default 15")
    g.add_argument("--degrees", action="store_const", const=True, help="theta column is in degrees")


def _add_train_flags(p):
    g = p.add_argument_group("training")
    g.add_argument("--kind", help="logistic | mlp | svm")
    g.add_argument("--seed", type=int)
    g.add_argument("--C", dest="C", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--tolerance", type=float)
    g.add_argument("--max-passes", dest="max_passes", type=int)
    g.add_argument("--l2-lambda", dest="l2_lambda", type=float)
    g.add_argument("--logistic-lr", dest="logistic_lr", type=float)
    g.add_argument("--logistic-epochs", dest="logistic_epochs", type=int)
    g.add_argument("--mlp-lr", dest="mlp_lr", type=float)
    g.add_argument("--mlp-momentum", dest="mlp_momentum", type=float)
    g.add_argument("--mlp-epochs", dest="mlp_epochs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="beedance", description="Honeybee dance segmentation and classification")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def command(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key=value config file (flags take precedence)")
        return p

    p = command("synth", "generate a synthetic dance corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-dances", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=float, help="heading noise sd (default 0.05)")
    p.add_argument("--axis", type=float, help="pin every dance's waggle axis to this value")

    p = command("segment", "trajectory CSV -> segments CSV")
    p.add_argument("trajectory")
    p.add_argument("-o", "--output")
    _add_monitor_flags(p)

    p = command("extract", "trajectory CSV -> feature CSV")
    p.add_argument("trajectory")
    p.add_argument("--segments", help="segments CSV (default: run the monitor)")
    p.add_argument("--windows", choices=("segments", "triggers"), default="segments")
    p.add_argument("--window-mode", dest="window_mode", help="segment | lookback (trigger windows only)")
    p.add_argument("--bee-id", help="default: trajectory file stem")
    p.add_argument("-o", "--output")
    _add_monitor_flags(p)

    p = command("train", "feature CSV(s) -> model file")
    p.add_argument("features", nargs="+")
    p.add_argument("-o", "--output", required=True)
    _add_train_flags(p)

    p = command("predict", "model + feature CSV -> predictions CSV")
    p.add_argument("features")
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--output")

    p = command("eval", "cross-validate on feature CSV(s)")
    p.add_argument("features", nargs="+")
    p.add_argument("--pool", action="store_true", help="concatenate all inputs into one table")
    p.add_argument("--k", type=int)
    p.add_argument("--seeds", type=int, default=1, help="repeat CV over this many fold seeds")
    p.add_argument("-o", "--output", help="report text file (default stdout)")
    p.add_argument("--csv", help="also write one CSV row per classifier x dataset")
    _add_train_flags(p)

    p = command("stream", "replay a trajectory through the real-time circuit")
    p.add_argument("trajectory")
    p.add_argument("--model", required=True)
    p.add_argument("--max-speed", action="store_true")
    p.add_argument("--rate", type=float, help="replay rate in Hz (default: trajectory rate)")
    p.add_argument("--window-mode", dest="window_mode", help="segment | lookback")
    p.add_argument("-o", "--output", help="event log CSV (default stdout)")
    _add_monitor_flags(p)

    p = command("report", "eval reports -> CSV, or features -> scatter data")
    p.add_argument("reports", nargs="*", help="report text files written by eval")
    p.add_argument("--scatter", nargs="+", help="feature CSVs to emit as x1,x2,label triples")
    p.add_argument("-o", "--output")
    return parser


# -- subcommands ---------------------------------------------------------------


def _cmd_synth(args, cfg: RunConfig):
    ranges = dict(DEFAULT_RANGES)
    if args.noise is not None:
        ranges["heading_noise_sd"] = (args.noise, args.noise)
    if args.axis is not None:
        ranges["waggle_axis"] = (args.axis, args.axis)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, (spec, traj, segs) in enumerate(generate_corpus(args.n_dances, ranges, cfg.seed)):
        write_trajectory(traj, out / f"dance_{i:03d}.csv")
        write_segments(segs, out / f"dance_{i:03d}_truth.csv")
    print(f"wrote {args.n_dances} dances to {out}", file=sys.stderr)


def _load(args, cfg):
    return load_trajectory(args.trajectory, degrees=cfg.degrees)


def _cmd_segment(args, cfg):
    segs = segment_trajectory(_load(args, cfg), cfg.monitor)
    with _output(args.output) as fh:
        write_segments(segs, fh)


def _cmd_extract(args, cfg):
    traj = _load(args, cfg)
    bee = args.bee_id or Path(args.trajectory).stem
    if args.windows == "triggers":
        table = build_trigger_table(traj, offline_trigger_windows(traj, cfg.monitor), bee, cfg.window_mode)
    else:
        segs = load_segments(args.segments) if args.segments else segment_trajectory(traj, cfg.monitor)
        table = build_feature_table(traj, segs, bee)
    with _output(args.output) as fh:
        write_features(table, fh)


def _cmd_train(args, cfg):
    if cfg.kind == "all":
        raise UsageError("train needs a single --kind")
    table = pool_tables(*(load_features(p) for p in args.features))
    model = fit_model(cfg.kind, table, cfg.train)
    Path(args.output).write_bytes(serialize_model(model))


def _cmd_predict(args, cfg):
    model = deserialize_model(Path(args.model).read_bytes())
    table = load_features(args.features)
    codes, scores = predict_many(model, table.X) if len(table) else ([], [])
    with _output(args.output) as fh:
        fh.write("bee_id,segment_idx,label,score_turn_right,score_turn_left,score_waggle\n")
        for row, code, s in zip(table.rows, codes, scores):
            fh.write(f"{row.bee_id},{row.segment_idx},{int(code)}," + ",".join(format(v, ".17g") for v in s) + "\n")


def _cmd_eval(args, cfg):
    tables = [(Path(p).stem, load_features(p)) for p in args.features]
    if args.pool:
        tables = [("pooled", pool_tables(*(t for _, t in tables)))]
    kinds = KINDS if cfg.kind == "all" else (cfg.kind,)
    reports = []
    for name, table in tables:
        for kind in kinds:
            if args.seeds > 1:
                mean, sd, runs = seed_sweep(table, kind, cfg.train, cfg.k, range(cfg.seed, cfg.seed + args.seeds))
                report = runs[0]
                report.config.update({"sweep_seeds": args.seeds, "sweep_mean": f"{mean:.6f}", "sweep_sd": f"{sd:.6f}"})
            else:
                report = cross_validate(table, kind, cfg.train, cfg.k, cfg.seed)
            report.dataset = name
            reports.append(report)
    with _output(args.output) as fh:
        fh.write(REPORT_SEPARATOR.join(r.to_text() for r in reports))
    if args.csv:
        Path(args.csv).write_text(reports_to_csv(reports))


def _cmd_stream(args, cfg):
    traj = _load(args, cfg)
    model = deserialize_model(Path(args.model).read_bytes())
    rate = None if args.max_speed else (args.rate or traj.rate_hz)
    result = replay_stream(traj, model, cfg.monitor, target_rate=rate, mode=cfg.window_mode)
    with _output(args.output) as fh:
        result.write_csv(fh)
    msg = f"{len(result.events)} events from {result.n_samples} samples in {result.elapsed_s:.3f} s"
    if args.max_speed:
        msg += f" ({result.throughput:,.0f} samples/s)"
    print(msg, file=sys.stderr)


def parse_reports(text: str) -> list[EvalReport]:
    return [EvalReport.from_text(chunk) for chunk in text.split(REPORT_SEPARATOR) if chunk.strip()]


def _cmd_report(args, cfg):
    if not args.reports and not args.scatter:
        raise UsageError("report needs report files and/or --scatter feature files")
    with _output(args.output) as fh:
        if args.reports:
            reports = []
            for p in args.reports:
                reports.extend(parse_reports(Path(p).read_text()))
            fh.write(reports_to_csv(reports))
        if args.scatter:
            if args.reports:
                fh.write("\n")
            fh.write("bee_id,x1,x2,label\n")
            for p in args.scatter:
                for r in load_features(p).rows:
                    label = "" if r.label is None else int(r.label)
                    fh.write(f"{r.bee_id},{r.features.x1:.17g},{r.features.x2:.17g},{label}\n")


_COMMANDS = {
    "synth": _cmd_synth,
    "segment": _cmd_segment,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "stream": _cmd_stream,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = build_run_config(args)
        _COMMANDS[args.command](args, cfg)
    except BeeDanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()

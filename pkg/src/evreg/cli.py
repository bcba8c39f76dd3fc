"""Command-line front end: synth, encode, train, decode, eval, cv, grid.

Every subcommand reads one YAML experiment config and writes plain-text
artifacts (CSV reports, checkpoints) into an output directory resolved as:
the --out flag if given, else $EVREG_OUT_DIR, else ./evreg_out.  All floats
are serialized with repr-exact precision, so repeated runs with the same
seed and config produce byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
divergence.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config, override_seed
from .data import (
    SynthConfig,
    load_events,
    load_scored_events,
    save_events,
    save_series,
    synth_generate,
)
from .errors import ConfigError, DataError, EvregError, InvalidConfig, NumericError
from .experiment import (
    CvResult,
    build_dataset,
    decode_outputs,
    encode_targets,
    grid_search,
    run_cv,
)
from .metric import edap_table
from .model import load_params, predict, save_params, train
from .types import TimeSeries

_FLOAT_FMT = "%.17g"
_OUT_ENV = "EVREG_OUT_DIR"


def _resolve_out(arg: str | None) -> Path:
    if arg:
        out = Path(arg)
    else:
        out = Path(os.environ.get(_OUT_ENV) or "evreg_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config = override_seed(config, args.seed)
    return config


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _fmt(value: float | None) -> str:
    return "" if value is None else _FLOAT_FMT % value


def _write_trace(path: Path, trace) -> None:
    lines = ["epoch,loss,val_edap"]
    for stat in trace:
        lines.append(f"{stat.epoch},{_fmt(stat.train_loss)},{_fmt(stat.val_score)}")
    _write_lines(path, lines)


def _write_report(path: Path, table: dict[tuple[str, int], float], mean: float) -> None:
    lines = ["class,tolerance,ap"]
    for (cls, tol), ap in table.items():
        lines.append(f"{cls},{tol},{_fmt(ap)}")
    lines.append(f"mean,all,{_fmt(mean)}")
    _write_lines(path, lines)


# -- subcommands ---------------------------------------------------------------


def _cmd_synth(args) -> int:
    config = _load(args)
    if not isinstance(config.data, SynthConfig):
        raise InvalidConfig("synth requires a data.synth section")
    out = _resolve_out(args.out)
    series_dir = out / "series"
    series_dir.mkdir(exist_ok=True)
    pairs = synth_generate(config.data)
    for series, _ in pairs:
        save_series(series_dir / f"{series.series_id}.csv", series)
    save_events(out / "events.csv", {e.series_id: e for _, e in pairs})
    print(f"wrote {len(pairs)} series to {series_dir} and {out / 'events.csv'}")
    return 0


def _cmd_encode(args) -> int:
    config = _load(args)
    out = _resolve_out(args.out)
    targets_dir = out / "targets"
    targets_dir.mkdir(exist_ok=True)
    series_list, truth = build_dataset(config)
    names = {
        "regression": ("onset", "offset"),
        "cpd": ("point",),
        "segmentation": ("label",),
    }[config.objective]
    for series in series_list:
        _, y = encode_targets(series, truth[series.series_id], config)
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        target = TimeSeries.build(
            series.series_id, dict(zip(names, y)), series.step_seconds
        )
        save_series(targets_dir / f"{series.series_id}.csv", target)
    print(f"wrote {len(series_list)} target files to {targets_dir}")
    return 0


def _cmd_train(args) -> int:
    config = _load(args)
    out = _resolve_out(args.out)
    series_list, truth = build_dataset(config)
    items = [encode_targets(s, truth[s.series_id], config) for s in series_list]
    result = train(items, config.model, config.train)
    save_params(out / "model.ckpt", result.params)
    _write_trace(out / "train_trace.csv", result.trace)
    last = result.trace[-1].train_loss
    print(f"trained {config.train.epochs} epochs, final loss {last:.6g}")
    print(f"checkpoint: {out / 'model.ckpt'}")
    return 0


def _cmd_decode(args) -> int:
    config = _load(args)
    out = _resolve_out(args.out)
    params = load_params(args.checkpoint)
    series_list, _ = build_dataset(config)
    outputs = {
        s.series_id: predict(params, s.as_array(), config.model)
        for s in series_list
    }
    predictions = decode_outputs(outputs, config, config.decode)
    save_events(out / "predictions.csv", predictions)
    count = sum(len(p.onsets) + len(p.offsets) for p in predictions.values())
    print(f"decoded {count} detections to {out / 'predictions.csv'}")
    return 0


def _cmd_eval(args) -> int:
    config = _load(args)
    out = _resolve_out(args.out)
    predictions = load_scored_events(args.pred)
    if args.truth:
        truth = load_events(args.truth)
    else:
        _, truth = build_dataset(config)
    table = edap_table(predictions, truth, config.metric)
    mean = float(np.mean(list(table.values())))
    _write_report(out / "report.csv", table, mean)
    print(f"edap {_FLOAT_FMT % mean}")
    return 0


def _run_cv(config: ExperimentConfig, jobs: int) -> CvResult:
    return run_cv(config, jobs=jobs)


def _cmd_cv(args) -> int:
    config = _load(args)
    out = _resolve_out(args.out)
    result = _run_cv(config, args.jobs)
    for fold in result.folds:
        _write_trace(out / f"fold{fold.fold_index}_trace.csv", fold.trace)
    save_events(out / "cv_predictions.csv", result.predictions)
    lines = ["fold,edap"]
    for fold in result.folds:
        lines.append(f"{fold.fold_index},{_fmt(fold.edap)}")
    lines.append(f"pooled,{_fmt(result.pooled_edap)}")
    _write_lines(out / "cv_report.csv", lines)
    _, truth = build_dataset(config)
    table = edap_table(result.predictions, truth, config.metric)
    _write_report(out / "report.csv", table, result.pooled_edap)
    print(f"pooled edap {_FLOAT_FMT % result.pooled_edap}")
    return 0


def _cmd_grid(args) -> int:
    config = _load(args)
    out = _resolve_out(args.out)
    result = _run_cv(config, args.jobs)
    _, truth = build_dataset(config)
    sweep = grid_search(result.outputs, truth, config.grid, config)
    lines = ["mu,sigma,edap"]
    for mu, sigma, score in sweep.table:
        sigma_txt = "none" if sigma is None else _FLOAT_FMT % sigma
        lines.append(f"{_fmt(mu)},{sigma_txt},{_fmt(score)}")
    _write_lines(out / "grid_table.csv", lines)
    best_sigma = "none" if sweep.best_sigma is None else _FLOAT_FMT % sweep.best_sigma
    print(
        f"best mu {_FLOAT_FMT % sweep.best_mu} sigma {best_sigma} "
        f"edap {_FLOAT_FMT % sweep.best_score} "
        f"(default {_FLOAT_FMT % sweep.default_score})"
    )
    return 0


# -- argument parsing ----------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser, jobs: bool = False) -> None:
    sub.add_argument("--config", required=True, help="YAML experiment config")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="override every seed")
    if jobs:
        sub.add_argument(
            "--jobs", type=int, default=1, help="parallel fold workers (default 1)"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evreg",
        description="Event detection via density regression: data, training, "
        "decoding, and tolerance-based evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("synth", help="generate the synthetic dataset"))
    _add_common(sub.add_parser("encode", help="write target channels per series"))
    _add_common(sub.add_parser("train", help="train one model on every series"))

    decode = sub.add_parser("decode", help="decode events from a checkpoint")
    _add_common(decode)
    decode.add_argument("--checkpoint", required=True, help="model checkpoint")

    ev = sub.add_parser("eval", help="score predictions against ground truth")
    _add_common(ev)
    ev.add_argument("--pred", required=True, help="predictions events CSV")
    ev.add_argument("--truth", default=None, help="truth events CSV (default: config data)")

    _add_common(sub.add_parser("cv", help="k-fold cross-validation"), jobs=True)
    _add_common(
        sub.add_parser("grid", help="decode-parameter grid search after cv"),
        jobs=True,
    )
    return parser


_COMMANDS = {
    "synth": _cmd_synth,
    "encode": _cmd_encode,
    "train": _cmd_train,
    "decode": _cmd_decode,
    "eval": _cmd_eval,
    "cv": _cmd_cv,
    "grid": _cmd_grid,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except EvregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

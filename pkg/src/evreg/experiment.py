"""Cross-validated training, post-hoc decode tuning, and dataset assembly.

The flow mirrors the evaluation protocol the package is built around: series
are split into k folds by id, each fold's model is trained on the rest and
scored on the held-out part every epoch, the raw held-out outputs of all
folds are pooled, and a single pooled score is reported.  Decode parameters
are tuned afterwards on those pooled outputs, so the sweep never retrains.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .config import ExperimentConfig, GridSpec, PathsSpec
from .data import SynthConfig, downsample, load_events, load_series, synth_generate
from .decode import (
    DecodeParams,
    decode_points,
    decode_regression,
    decode_seg_peaks,
    decode_seg_threshold,
)
from .errors import EmptyGrid, InvalidConfig, InvalidEvents, IoError, TooFewSeries
from .metric import edap
from .model import EpochStats, predict, train
from .targets import encode_cpd, encode_regression, encode_segmentation, sigma_schedule
from .types import EventSet, ScoredEvents, TimeSeries, points_from_intervals


def build_dataset(
    config: ExperimentConfig,
) -> tuple[list[TimeSeries], dict[str, EventSet]]:
    """Materialize the configured dataset at model resolution.

    Synthetic data is generated in place; a paths dataset reads every *.csv
    in the series directory (sorted by name) plus the shared events file.
    Downsampling and the interval-to-onset-point collapse for the cpd
    objective happen here, so callers always see final-resolution steps.
    """
    if isinstance(config.data, SynthConfig):
        pairs = synth_generate(config.data)
    else:
        pairs = _load_pairs(config.data)
    if config.downsample > 1:
        pairs = [
            downsample(series, config.downsample, events)
            for series, events in pairs
        ]
    if config.objective == "cpd":
        pairs = [
            (series, points_from_intervals(events, "onset"))
            for series, events in pairs
        ]
    series_list = [series for series, _ in pairs]
    truth = {events.series_id: events for _, events in pairs}
    return series_list, truth


def _load_pairs(paths: PathsSpec) -> list[tuple[TimeSeries, EventSet]]:
    series_dir = Path(paths.series_dir)
    if not series_dir.is_dir():
        raise IoError(f"series directory {series_dir} does not exist")
    files = sorted(series_dir.glob("*.csv"))
    if not files:
        raise IoError(f"no series CSVs found under {series_dir}")
    events_by_id = load_events(paths.events)
    pairs = []
    for path in files:
        series = load_series(path)
        if series.series_id not in events_by_id:
            raise InvalidEvents(f"no events for series {series.series_id!r}")
        pairs.append((series, events_by_id[series.series_id]))
    return pairs


def encode_targets(
    series: TimeSeries,
    events: EventSet,
    config: ExperimentConfig,
    sigma: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One training item: stacked input channels and the objective's target.

    sigma, when given, overrides the pdf width (used by decay schedules);
    segmentation ignores it and yields integer labels.
    """
    x = series.as_array()
    steps = series.num_steps
    if config.objective == "segmentation":
        y = encode_segmentation(events, steps).channels[0].astype(np.int64)
        return x, y
    spec = config.pdf if sigma is None else replace(config.pdf, sigma=sigma)
    if config.objective == "cpd":
        return x, encode_cpd(events, steps, spec).channels
    return x, encode_regression(events, steps, spec).channels


def fold_splits(
    series_ids: Sequence[str], folds: int
) -> list[tuple[tuple[str, ...], tuple[str, ...]]]:
    """(train_ids, val_ids) per fold; contiguous blocks of the sorted ids."""
    ids = sorted(series_ids)
    if folds < 2:
        raise InvalidConfig(f"folds={folds}, expected >= 2")
    if len(ids) < folds:
        raise TooFewSeries(f"{len(ids)} series cannot fill {folds} folds")
    parts = np.array_split(np.asarray(ids, dtype=object), folds)
    out = []
    for part in parts:
        val = tuple(str(s) for s in part)
        held = set(val)
        out.append((tuple(s for s in ids if s not in held), val))
    return out


def decode_outputs(
    outputs: Mapping[str, np.ndarray],
    config: ExperimentConfig,
    params: DecodeParams,
) -> dict[str, ScoredEvents]:
    """Run the objective's decoder over raw model outputs, series by series."""
    decoded: dict[str, ScoredEvents] = {}
    for sid in sorted(outputs):
        y = outputs[sid]
        if config.objective == "regression":
            decoded[sid] = decode_regression(y[0], y[1], params)
        elif config.objective == "cpd":
            decoded[sid] = decode_points(y[0], params)
        elif config.seg_method == "threshold":
            decoded[sid] = decode_seg_threshold(y[1], params)
        else:
            decoded[sid] = decode_seg_peaks(y[1], params)
    return decoded


@dataclass(frozen=True)
class FoldResult:
    """Raw held-out outputs of one fold plus its training history."""

    fold_index: int
    val_ids: tuple[str, ...]
    outputs: dict[str, np.ndarray]
    trace: tuple[EpochStats, ...]
    best_epoch: int
    edap: float


@dataclass(frozen=True)
class CvResult:
    """Per-fold results, pooled raw outputs, and the pooled default score."""

    folds: tuple[FoldResult, ...]
    outputs: dict[str, np.ndarray]
    predictions: dict[str, ScoredEvents]
    pooled_edap: float


def _fold_payload(config, fold_index, pairs, train_ids, val_ids):
    by_id = {series.series_id: (series, events) for series, events in pairs}
    train_pairs = [by_id[sid] for sid in train_ids]
    val_inputs = {sid: by_id[sid][0].as_array() for sid in val_ids}
    val_truth = {sid: by_id[sid][1] for sid in val_ids}
    return (config, fold_index, train_pairs, val_inputs, val_truth)


def _run_fold(payload) -> FoldResult:
    config, fold_index, train_pairs, val_inputs, val_truth = payload
    model_config = replace(config.model, seed=config.model.seed + fold_index)
    items = [encode_targets(s, e, config) for s, e in train_pairs]
    for x, _ in items:
        if x.shape[0] != model_config.in_channels:
            raise InvalidConfig(
                f"model expects {model_config.in_channels} input channels, "
                f"dataset provides {x.shape[0]}"
            )

    def val_scorer(params) -> float:
        outputs = {
            sid: predict(params, x, model_config)
            for sid, x in val_inputs.items()
        }
        preds = decode_outputs(outputs, config, config.decode)
        return edap(preds, val_truth, config.metric)

    refresh = None
    tc = config.train
    if tc.sigma_start is not None and config.objective != "segmentation":

        def refresh(epoch: int):
            s = sigma_schedule(epoch, tc.epochs, tc.sigma_start, tc.sigma_end)
            return [encode_targets(srs, evs, config, sigma=s) for srs, evs in train_pairs]

    result = train(items, model_config, tc, val_scorer=val_scorer, refresh_targets=refresh)
    outputs = {
        sid: predict(result.params, x, model_config)
        for sid, x in val_inputs.items()
    }
    preds = decode_outputs(outputs, config, config.decode)
    fold_edap = edap(preds, val_truth, config.metric)
    return FoldResult(
        fold_index=fold_index,
        val_ids=tuple(sorted(val_inputs)),
        outputs=outputs,
        trace=tuple(result.trace),
        best_epoch=result.best_epoch,
        edap=fold_edap,
    )


def run_cv(config: ExperimentConfig, jobs: int = 1) -> CvResult:
    """k-fold cross-validation; the held-out outputs are pooled and scored once.

    Folds are independent, so jobs > 1 runs them in worker processes; the
    result is identical either way because each fold is deterministic and
    the pooling step sorts by series id.
    """
    series_list, truth = build_dataset(config)
    pairs = list(zip(series_list, (truth[s.series_id] for s in series_list)))
    splits = fold_splits([s.series_id for s in series_list], config.folds)
    payloads = [
        _fold_payload(config, i, pairs, train_ids, val_ids)
        for i, (train_ids, val_ids) in enumerate(splits)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            folds = list(pool.map(_run_fold, payloads))
    else:
        folds = [_run_fold(p) for p in payloads]
    folds.sort(key=lambda f: f.fold_index)

    outputs: dict[str, np.ndarray] = {}
    for fold in folds:
        outputs.update(fold.outputs)
    predictions = decode_outputs(outputs, config, config.decode)
    pooled = edap(predictions, truth, config.metric)
    return CvResult(
        folds=tuple(folds),
        outputs=outputs,
        predictions=predictions,
        pooled_edap=pooled,
    )


@dataclass(frozen=True)
class GridResult:
    """Winning decode cell plus the full (mu, sigma, score) table."""

    best_mu: float
    best_sigma: float | None
    best_score: float
    default_score: float
    table: tuple[tuple[float, float | None, float], ...]


def _sigma_order(sigma: float | None) -> tuple[int, float]:
    return (0, 0.0) if sigma is None else (1, sigma)


def grid_search(
    outputs: Mapping[str, np.ndarray],
    truth: Mapping[str, EventSet],
    grid: GridSpec,
    config: ExperimentConfig,
    score_fn: Callable[[float, float | None], float] | None = None,
) -> GridResult:
    """Sweep decode parameters over already-produced model outputs.

    Regression objectives ignore mu, so their sweep only walks the sigma
    candidates (mu pinned at the configured default).  Ties prefer no
    smoothing, then smaller sigma, then smaller mu.  score_fn, when given,
    replaces the decode-and-score pipeline (used to test cell selection in
    isolation).
    """
    if config.objective == "segmentation":
        cells = [(m, s) for m in grid.mu for s in grid.sigma]
    else:
        cells = [(config.decode.mu, s) for s in grid.sigma]
    if not cells:
        raise EmptyGrid("no grid cells to evaluate")

    def evaluate(mu: float, sigma: float | None) -> float:
        if score_fn is not None:
            return score_fn(mu, sigma)
        params = replace(config.decode, mu=mu, sigma=sigma)
        return edap(decode_outputs(outputs, config, params), truth, config.metric)

    table = tuple((mu, sigma, evaluate(mu, sigma)) for mu, sigma in cells)
    best_mu, best_sigma, best_score = min(
        table, key=lambda row: (-row[2], _sigma_order(row[1]), row[0])
    )
    default_score = evaluate(config.decode.mu, config.decode.sigma)
    return GridResult(
        best_mu=best_mu,
        best_sigma=best_sigma,
        best_score=best_score,
        default_score=default_score,
        table=table,
    )

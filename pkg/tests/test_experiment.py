"""Cross-validation pipeline: datasets, folds, pooled scoring, grid sweeps."""

import numpy as np
import pytest

from evreg.config import config_from_mapping
from evreg.data import save_events, save_series, synth_generate, SynthConfig
from evreg.decode import decode_points, decode_regression, decode_seg_peaks, decode_seg_threshold
from evreg.errors import InvalidConfig, InvalidEvents, IoError, TooFewSeries
from evreg.experiment import (
    build_dataset,
    decode_outputs,
    encode_targets,
    fold_splits,
    grid_search,
    run_cv,
)
from evreg.metric import edap
from evreg.types import INTERVAL, POINT, points_from_intervals


def make_config(objective="regression", **over):
    doc = {
        "objective": objective,
        "data": {"synth": {
            "num_series": 8, "length": 128,
            "mean_event_duration": 12, "mean_gap": 24, "noise_std": 0.4,
        }},
        "model": {"in_channels": 2, "hidden_channels": [4], "kernel_size": 3},
        "train": {"epochs": 2, "batch_size": 4},
        "decode": {"alpha": 4},
        "metric": {"tolerances": [1, 2, 5]},
        "folds": 4,
    }
    if objective != "segmentation":
        doc["pdf"] = {"kind": "gaussian", "day_length_d": 64, "width_w": 17, "sigma": 2}
    doc.update(over)
    return config_from_mapping(doc)


class TestFoldSplits:
    def test_even_partition(self):
        ids = [f"s{i}" for i in range(8)]
        splits = fold_splits(ids, 4)
        assert len(splits) == 4
        val_sets = [set(val) for _, val in splits]
        assert all(len(v) == 2 for v in val_sets)
        assert set().union(*val_sets) == set(ids)
        for i, a in enumerate(val_sets):
            for b in val_sets[i + 1:]:
                assert not (a & b)
        for train, val in splits:
            assert sorted(train + val) == sorted(ids)

    def test_uneven_partition_front_loads(self):
        ids = [f"s{i}" for i in range(10)]
        sizes = [len(val) for _, val in fold_splits(ids, 4)]
        assert sizes == [3, 3, 2, 2]

    def test_val_blocks_are_contiguous_in_sorted_order(self):
        ids = ["d", "b", "a", "c", "f", "e"]
        splits = fold_splits(ids, 3)
        assert [val for _, val in splits] == [("a", "b"), ("c", "d"), ("e", "f")]

    def test_too_few_series(self):
        with pytest.raises(TooFewSeries):
            fold_splits(["a", "b", "c"], 4)

    def test_folds_lower_bound(self):
        with pytest.raises(InvalidConfig):
            fold_splits(["a", "b"], 1)


class TestBuildDataset:
    def test_synth(self):
        config = make_config()
        series_list, truth = build_dataset(config)
        assert len(series_list) == 8
        assert {s.series_id for s in series_list} == set(truth)
        assert all(ev.kind == INTERVAL for ev in truth.values())

    def test_downsample_changes_resolution(self):
        config = make_config(downsample=4)
        series_list, _ = build_dataset(config)
        assert series_list[0].num_steps == 32
        assert len(series_list[0].channels) == 8  # 2 raw x mean/std/max/min

    def test_cpd_collapses_intervals_to_onsets(self):
        interval_truth = build_dataset(make_config())[1]
        point_truth = build_dataset(make_config("cpd"))[1]
        for sid, events in point_truth.items():
            assert events.kind == POINT
            onsets = [ev.onset for ev in interval_truth[sid].events]
            assert [ev.step for ev in events.events] == onsets

    def test_paths_round_trip(self, tmp_path):
        pairs = synth_generate(SynthConfig(
            num_series=3, length=128, mean_event_duration=12,
            mean_gap=24, noise_std=0.4,
        ))
        series_dir = tmp_path / "series"
        series_dir.mkdir()
        for series, _ in pairs:
            save_series(series_dir / f"{series.series_id}.csv", series)
        save_events(tmp_path / "events.csv", {e.series_id: e for _, e in pairs})
        config = make_config(data={"paths": {
            "series_dir": str(series_dir), "events": str(tmp_path / "events.csv"),
        }})
        series_list, truth = build_dataset(config)
        assert [s.series_id for s in series_list] == ["s000", "s001", "s002"]
        assert truth["s001"].events == pairs[1][1].events

    def test_missing_series_dir(self, tmp_path):
        config = make_config(data={"paths": {
            "series_dir": str(tmp_path / "nope"), "events": str(tmp_path / "e.csv"),
        }})
        with pytest.raises(IoError):
            build_dataset(config)

    def test_series_without_events(self, tmp_path):
        pairs = synth_generate(SynthConfig(
            num_series=2, length=128, mean_event_duration=12,
            mean_gap=24, noise_std=0.4,
        ))
        series_dir = tmp_path / "series"
        series_dir.mkdir()
        for series, _ in pairs:
            save_series(series_dir / f"{series.series_id}.csv", series)
        save_events(tmp_path / "events.csv", {"s000": pairs[0][1]})
        config = make_config(data={"paths": {
            "series_dir": str(series_dir), "events": str(tmp_path / "events.csv"),
        }})
        with pytest.raises(InvalidEvents):
            build_dataset(config)


class TestEncodeTargets:
    @pytest.fixture()
    def pair(self):
        config = make_config()
        series_list, truth = build_dataset(config)
        series = series_list[0]
        return config, series, truth[series.series_id]

    def test_regression_shapes(self, pair):
        config, series, events = pair
        x, y = encode_targets(series, events, config)
        assert x.shape == (2, 128)
        assert y.shape == (2, 128)
        assert y.dtype == np.float64

    def test_segmentation_integer_labels(self, pair):
        _, series, events = pair
        config = make_config("segmentation")
        _, y = encode_targets(series, events, config)
        assert y.shape == (128,)
        assert y.dtype == np.int64
        assert set(np.unique(y)) <= {0, 1}
        assert y.sum() > 0

    def test_cpd_single_channel(self, pair):
        _, series, events = pair
        config = make_config("cpd")
        _, y = encode_targets(series, points_from_intervals(events, "onset"), config)
        assert y.shape == (1, 128)

    def test_sigma_override_narrows_regression_target(self, pair):
        config, series, events = pair
        _, y_default = encode_targets(series, events, config)
        _, y_narrow = encode_targets(series, events, config, sigma=1.0)
        assert not np.array_equal(y_default, y_narrow)
        # narrower pdf -> taller peak
        assert y_narrow.max() > y_default.max()

    def test_sigma_override_ignored_by_segmentation(self, pair):
        _, series, events = pair
        config = make_config("segmentation")
        _, y1 = encode_targets(series, events, config)
        _, y2 = encode_targets(series, events, config, sigma=6.0)
        assert np.array_equal(y1, y2)


class TestDecodeOutputs:
    @pytest.fixture()
    def fake_outputs(self):
        rng = np.random.default_rng(0)
        outputs = {}
        for i in range(3):
            y = np.abs(rng.normal(size=(2, 96))) * 0.2
            y[0, 20 + i] = 4.0
            y[1, 60 + i] = 4.0
            outputs[f"s{i:03d}"] = y
        return outputs

    def test_regression_dispatch(self, fake_outputs):
        config = make_config()
        decoded = decode_outputs(fake_outputs, config, config.decode)
        for sid, y in fake_outputs.items():
            assert decoded[sid] == decode_regression(y[0], y[1], config.decode)

    def test_cpd_dispatch(self, fake_outputs):
        config = make_config("cpd")
        decoded = decode_outputs(fake_outputs, config, config.decode)
        for sid, y in fake_outputs.items():
            assert decoded[sid] == decode_points(y[0], config.decode)
            assert decoded[sid].offsets == ()

    def test_segmentation_dispatch_both_methods(self):
        rng = np.random.default_rng(1)
        outputs = {}
        for i in range(3):
            p = np.clip(rng.normal(0.3, 0.1, size=96), 0.0, 1.0)
            p[30:50] = 0.9
            outputs[f"s{i:03d}"] = np.stack([1.0 - p, p])
        threshold = make_config("segmentation")
        peaks = make_config("segmentation", seg_method="peaks")
        decoded_t = decode_outputs(outputs, threshold, threshold.decode)
        decoded_p = decode_outputs(outputs, peaks, peaks.decode)
        for sid, y in outputs.items():
            assert decoded_t[sid] == decode_seg_threshold(y[1], threshold.decode)
            assert decoded_p[sid] == decode_seg_peaks(y[1], peaks.decode)


@pytest.fixture(scope="module")
def small_cv():
    config = make_config()
    return config, run_cv(config)


class TestRunCv:
    def test_val_ids_partition_dataset(self, small_cv):
        config, result = small_cv
        all_ids = {s.series_id for s in build_dataset(config)[0]}
        seen = []
        for fold in result.folds:
            seen.extend(fold.val_ids)
        assert sorted(seen) == sorted(all_ids)
        assert len(seen) == len(set(seen))

    def test_outputs_cover_every_series(self, small_cv):
        config, result = small_cv
        assert set(result.outputs) == {s.series_id for s in build_dataset(config)[0]}
        for y in result.outputs.values():
            assert y.shape == (2, 128)
            assert np.all(np.isfinite(y))

    def test_trace_runs_full_schedule(self, small_cv):
        config, result = small_cv
        for fold in result.folds:
            assert len(fold.trace) == config.train.epochs
            assert 0 <= fold.best_epoch < config.train.epochs
            assert all(s.val_score is not None for s in fold.trace)

    def test_pooled_score_matches_decode_then_metric(self, small_cv):
        config, result = small_cv
        _, truth = build_dataset(config)
        decoded = decode_outputs(result.outputs, config, config.decode)
        assert decoded == result.predictions
        assert result.pooled_edap == edap(decoded, truth, config.metric)

    def test_fold_scores_match_restricted_metric(self, small_cv):
        config, result = small_cv
        _, truth = build_dataset(config)
        for fold in result.folds:
            decoded = decode_outputs(fold.outputs, config, config.decode)
            fold_truth = {sid: truth[sid] for sid in fold.val_ids}
            assert fold.edap == edap(decoded, fold_truth, config.metric)

    def test_deterministic_repeat(self, small_cv):
        config, result = small_cv
        again = run_cv(config)
        assert again.pooled_edap == result.pooled_edap
        for sid in result.outputs:
            assert np.array_equal(again.outputs[sid], result.outputs[sid])

    def test_parallel_matches_serial(self, small_cv):
        config, result = small_cv
        parallel = run_cv(config, jobs=2)
        assert parallel.pooled_edap == result.pooled_edap
        for sid in result.outputs:
            assert np.array_equal(parallel.outputs[sid], result.outputs[sid])

    def test_channel_mismatch_rejected(self):
        config = make_config(model={
            "in_channels": 3, "hidden_channels": [4], "kernel_size": 3,
        })
        with pytest.raises(InvalidConfig, match="channels"):
            run_cv(config)

    def test_sigma_schedule_changes_training(self):
        base = make_config()
        scheduled = make_config(train={
            "epochs": 2, "batch_size": 4, "sigma_start": 2.0, "sigma_end": 1.0,
        })
        a = run_cv(base)
        b = run_cv(scheduled)
        assert not np.array_equal(
            a.outputs["s000"], b.outputs["s000"]
        )


class TestGridSearch:
    def test_regression_sweeps_sigma_only(self):
        config = make_config(grid={"mu": [0.2, 0.5], "sigma": ["none", 1, 10]})
        scores = {None: 0.3, 1.0: 0.5, 10.0: 0.9}
        result = grid_search({}, {}, config.grid, config,
                             score_fn=lambda mu, sigma: scores[sigma])
        assert len(result.table) == 3
        assert all(mu == config.decode.mu for mu, _, _ in result.table)
        assert (result.best_mu, result.best_sigma) == (config.decode.mu, 10.0)
        assert result.best_score == 0.9
        # default cell is (decode.mu, decode.sigma) = (0.5, None)
        assert result.default_score == 0.3

    def test_segmentation_sweeps_full_product(self):
        config = make_config("segmentation",
                             grid={"mu": [0.3, 0.5], "sigma": ["none", 1]})
        calls = []
        result = grid_search({}, {}, config.grid, config,
                             score_fn=lambda mu, sigma: calls.append((mu, sigma)) or 0.5)
        assert len(result.table) == 4
        assert set(calls[:4]) == {(0.3, None), (0.3, 1.0), (0.5, None), (0.5, 1.0)}

    def test_default_grid_cell_counts(self):
        seg = make_config("segmentation")
        reg = make_config()
        seg_result = grid_search({}, {}, seg.grid, seg, score_fn=lambda m, s: 0.0)
        reg_result = grid_search({}, {}, reg.grid, reg, score_fn=lambda m, s: 0.0)
        assert len(seg_result.table) == 55
        assert len(reg_result.table) == 5

    def test_tie_breaks_prefer_no_smoothing_then_small(self):
        config = make_config("segmentation",
                             grid={"mu": [0.7, 0.3], "sigma": [10, "none", 1]})
        result = grid_search({}, {}, config.grid, config, score_fn=lambda m, s: 1.0)
        assert result.best_sigma is None
        assert result.best_mu == 0.3

    def test_tie_breaks_prefer_smaller_sigma(self):
        config = make_config(grid={"mu": [0.5], "sigma": [10, 1]})
        result = grid_search({}, {}, config.grid, config, score_fn=lambda m, s: 1.0)
        assert result.best_sigma == 1.0

    def test_singleton_grid(self):
        config = make_config(grid={"mu": [0.5], "sigma": ["none"]})
        result = grid_search({}, {}, config.grid, config, score_fn=lambda m, s: 0.7)
        assert result.table == ((0.5, None, 0.7),)

    def test_tuned_never_beats_default_on_real_outputs(self, small_cv):
        config, result = small_cv
        _, truth = build_dataset(config)
        tuned = grid_search(result.outputs, truth, config.grid, config)
        assert tuned.best_score >= tuned.default_score
        assert tuned.default_score == result.pooled_edap

    def test_tuned_on_probability_outputs_for_segmentation(self):
        # synthetic class-1 probabilities avoid a second training run
        config = make_config("segmentation",
                             grid={"mu": [0.3, 0.5, 0.7], "sigma": ["none", 1]})
        series_list, truth = build_dataset(config)
        rng = np.random.default_rng(2)
        outputs = {}
        for series in series_list:
            p = np.clip(rng.normal(0.2, 0.05, size=series.num_steps), 0.0, 1.0)
            for ev in truth[series.series_id].events:
                p[ev.onset: ev.offset + 1] = 0.85
            outputs[series.series_id] = np.stack([1.0 - p, p])
        tuned = grid_search(outputs, truth, config.grid, config)
        assert tuned.best_score >= tuned.default_score
        assert len(tuned.table) == 6

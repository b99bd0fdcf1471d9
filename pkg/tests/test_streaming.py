import numpy as np
import pytest

from capturenet.datasets import inference_windows
from capturenet.pipeline import detect_trace
from capturenet.postprocess import (
    WindowPrediction,
    aggregate_regions,
    smooth_labels,
    threshold_labels,
)
from capturenet.preprocess import downsample, make_windows, normalize
from capturenet.streaming import (
    DeadPoreRule,
    RegionEvent,
    StatusEvent,
    StreamingDetector,
    decimate_minmax,
)
from capturenet.nn.model import CaptureNetDeep
from capturenet.sim import PhaseSpec, generate_trace
from conftest import make_tiny_run, tiny_config


@pytest.fixture(scope="module")
def model():
    return CaptureNetDeep(160, dropout=0.0, seed=21)


@pytest.fixture(scope="module")
def trained_model(tiny_runs, tiny_detector_config):
    # quick fit so the detector actually separates capture from open pore
    from capturenet.datasets import build_balanced_dataset
    from capturenet.training import TrainConfig, train_model

    train_ds = build_balanced_dataset(tiny_runs[:4], tiny_detector_config, seed=0)
    val_ds = build_balanced_dataset(tiny_runs[4:], tiny_detector_config, seed=0)
    m = CaptureNetDeep(160, dropout=0.2, seed=0)
    train_model(m, train_ds, val_ds,
                TrainConfig(batch_size=32, lr=3e-3, weight_decay=1e-4,
                            max_epochs=150, patience=150), seed=0)
    return m


def feed(det, samples, chunks, rng=None):
    events = []
    if chunks == 1:
        events += det.ingest(samples)
    else:
        bounds = (
            sorted(rng.choice(np.arange(1, samples.size), chunks - 1, replace=False))
            if rng is not None
            else np.linspace(0, samples.size, chunks + 1).astype(int)[1:-1]
        )
        for piece in np.split(samples, bounds):
            events += det.ingest(piece)
    events += det.finish()
    return events


class TestChunkingInvariance:
    def test_random_chunks_match_single_chunk(self, trained_model, tiny_detector_config):
        run = make_tiny_run(77, n_captures=2)
        one = StreamingDetector(trained_model, tiny_detector_config,
                                run.trace.sample_rate_hz, channel=1)
        feed(one, run.trace.samples, 1)
        for chunk_seed in (0, 1):
            many = StreamingDetector(trained_model, tiny_detector_config,
                                     run.trace.sample_rate_hz, channel=1)
            feed(many, run.trace.samples, 23,
                 rng=np.random.default_rng(chunk_seed))
            assert many.regions() == one.regions()
            assert [w.probability for w in many.window_predictions()] == \
                   [w.probability for w in one.window_predictions()]
            assert many.status == one.status

    def test_sub_block_chunks_emit_nothing_early(self, model, tiny_detector_config):
        det = StreamingDetector(model, tiny_detector_config, 1000.0)
        events = det.ingest(np.full(tiny_detector_config.downsample_factor - 1, 180.0,
                                    dtype=np.float32))
        assert events == []
        assert det.ds_total == 0

    def test_exact_window_chunk_classifies_once(self, model, tiny_detector_config):
        cfg = tiny_detector_config
        det = StreamingDetector(model, cfg, 1000.0)
        n_raw = cfg.window_size * cfg.downsample_factor
        det.ingest(np.full(n_raw, 180.0, dtype=np.float32))
        assert len(det.window_predictions()) == 1


class TestOfflineEquivalence:
    def test_streaming_matches_functional_pipeline(self, trained_model,
                                                   tiny_detector_config):
        cfg = tiny_detector_config
        run = make_tiny_run(88, n_captures=2)
        det = StreamingDetector(trained_model, cfg, run.trace.sample_rate_hz)
        det.ingest(run.trace.samples)
        det.finish()

        ds = downsample(run.trace.samples, cfg.downsample_factor)
        norm = normalize(ds, cfg.normalization_scale_pa)
        windows = make_windows(norm, cfg.window_size, cfg.infer_step)
        probs = [float(trained_model.predict_proba(w.values[None, :])[0])
                 for w in windows]
        labels = smooth_labels(threshold_labels(probs, cfg.threshold))
        preds = [
            WindowPrediction(w.ds_start, w.ds_end, p, l)
            for w, p, l in zip(windows, probs, labels)
        ]
        expected = aggregate_regions(preds, cfg.downsample_factor)

        assert det.regions() == expected
        got_probs = [w.probability for w in det.window_predictions()]
        assert got_probs == probs

    def test_detect_trace_wrapper_matches(self, trained_model, tiny_detector_config):
        run = make_tiny_run(89, n_captures=1)
        a = detect_trace(run.trace, trained_model, tiny_detector_config)
        det = StreamingDetector(trained_model, tiny_detector_config,
                                run.trace.sample_rate_hz)
        det.ingest(run.trace.samples)
        det.finish()
        assert a.regions == det.regions()

    def test_strided_decimation_variant_matches_offline(self, trained_model):
        from capturenet.preprocess import decimate_strided

        cfg = tiny_config(downsample_method="stride")
        run = make_tiny_run(92, n_captures=1)
        det = StreamingDetector(trained_model, cfg, run.trace.sample_rate_hz)
        feed(det, run.trace.samples, 17, rng=np.random.default_rng(4))

        ds = decimate_strided(run.trace.samples, cfg.downsample_factor)
        norm = normalize(ds, cfg.normalization_scale_pa)
        windows = make_windows(norm, cfg.window_size, cfg.infer_step)
        probs = [float(trained_model.predict_proba(w.values[None, :])[0])
                 for w in windows]
        assert [w.probability for w in det.window_predictions()] == probs


class TestSmoothingLatency:
    def test_isolated_label_flips_once_neighbor_arrives(self, tiny_detector_config):
        cfg = tiny_detector_config

        class ScriptedModel:
            architecture = "scripted"

            def __init__(self, probs):
                self.probs = list(probs)
                self.i = 0
                self.params = {}

            def predict_proba(self, x):
                p = self.probs[self.i]
                self.i += 1
                return np.array([p])

        det = StreamingDetector(ScriptedModel([0.1, 0.9, 0.1]), cfg, 1000.0)
        raw_per_window = cfg.window_size * cfg.downsample_factor
        det.ingest(np.full(raw_per_window, 180.0, dtype=np.float32))
        det.ingest(np.full(raw_per_window, 180.0, dtype=np.float32))
        # window 1 (prob 0.9) is classified but not yet confirmed
        assert [w.label for w in det.window_predictions()][:1] == [0]
        assert det.regions() == []
        det.ingest(np.full(raw_per_window, 180.0, dtype=np.float32))
        det.finish()
        # [0, 1, 0] -> [0, 0, 0]: the isolated window never becomes a region
        assert det.regions() == []
        assert [w.label for w in det.window_predictions()] == [0, 0, 0]


class TestStatusRules:
    def test_closed_level_is_dead(self, model, tiny_detector_config):
        det = StreamingDetector(model, tiny_detector_config, 1000.0)
        rng = np.random.default_rng(0)
        events = det.ingest(rng.normal(5.0, 1.0, 20_000).astype(np.float32))
        assert det.status == "dead"
        assert StatusEvent(channel=1, status="dead") in events

    def test_open_level_is_active(self, model, tiny_detector_config):
        det = StreamingDetector(model, tiny_detector_config, 1000.0)
        rng = np.random.default_rng(1)
        det.ingest(rng.normal(180.0, 3.0, 20_000).astype(np.float32))
        assert det.status == "active"

    def test_capture_level_with_drops_is_not_dead(self, model, tiny_detector_config):
        # p95 of |20 pA plus drops| stays well above the 10 pA dead cutoff
        phase = PhaseSpec("capture", 20_000, 20.0, 5.0, drop_rate_hz=2.0,
                          drop_duration_samples=(5, 20))
        trace, _ = generate_trace([phase], 1000.0, seed=3)
        det = StreamingDetector(model, tiny_detector_config, 1000.0)
        det.ingest(trace.samples)
        assert det.status != "dead"

    def test_capture_status_when_region_confirmed(self, trained_model,
                                                  tiny_detector_config):
        run = make_tiny_run(90, n_captures=1, total=30_000)
        det = StreamingDetector(trained_model, tiny_detector_config,
                                run.trace.sample_rate_hz)
        ann = run.annotations[0]
        events = feed(det, run.trace.samples, 40)
        region_events = [e for e in events if isinstance(e, RegionEvent)]
        assert region_events, "expected at least one region"
        statuses = [e.status for e in events if isinstance(e, StatusEvent)]
        assert "capture" in statuses


class TestEventContracts:
    def test_regions_monotone_and_never_duplicated(self, trained_model,
                                                   tiny_detector_config):
        run = make_tiny_run(91, n_captures=2)
        det = StreamingDetector(trained_model, tiny_detector_config,
                                run.trace.sample_rate_hz)
        events = feed(det, run.trace.samples, 60, rng=np.random.default_rng(5))
        seen_regions = set()
        growing = {}
        last_status = "active"
        for e in events:
            if isinstance(e, RegionEvent):
                assert e not in seen_regions, "region event emitted twice"
                seen_regions.add(e)
                prev = growing.get(e.start_raw)
                if prev is not None:
                    assert e.end_raw > prev, "region shrank or stalled"
                growing[e.start_raw] = e.end_raw
            elif isinstance(e, StatusEvent):
                assert e.status != last_status, "status event without a change"
                last_status = e.status
        final = {(r.start_raw, r.end_raw) for r in det.regions()}
        assert {(s, e) for s, e in growing.items()} == final

    def test_threshold_change_applies_to_future_windows_only(self, tiny_detector_config):
        cfg = tiny_detector_config

        class ConstantModel:
            architecture = "const"
            params = {}

            def predict_proba(self, x):
                return np.array([0.6])

        det = StreamingDetector(ConstantModel(), cfg, 1000.0)
        raw_per_window = cfg.window_size * cfg.downsample_factor
        det.ingest(np.full(raw_per_window * 2, 180.0, dtype=np.float32))
        det.set_threshold(0.7)  # p=0.6 now reads as non-capture
        det.ingest(np.full(raw_per_window * 2, 180.0, dtype=np.float32))
        det.finish()
        assert [w.label for w in det.window_predictions()] == [1, 1, 0, 0]
        assert len(det.regions()) == 1

    def test_ingest_after_finish_rejected(self, model, tiny_detector_config):
        det = StreamingDetector(model, tiny_detector_config, 1000.0)
        det.finish()
        with pytest.raises(RuntimeError):
            det.ingest(np.ones(10, dtype=np.float32))

    def test_rejects_nonfinite_chunk(self, model, tiny_detector_config):
        det = StreamingDetector(model, tiny_detector_config, 1000.0)
        with pytest.raises(ValueError, match="non-finite"):
            det.ingest(np.array([1.0, np.nan], dtype=np.float32))


class TestDecimation:
    def test_short_input_passthrough(self):
        idx, vals = decimate_minmax(np.arange(10, dtype=np.float32), 5, 100)
        np.testing.assert_array_equal(idx, np.arange(5, 15))

    def test_bounded_output_preserves_extremes(self):
        rng = np.random.default_rng(2)
        values = rng.normal(0, 1, 60_000).astype(np.float32)
        idx, vals = decimate_minmax(values, 0, 1000)
        assert len(vals) <= 1000
        assert vals.max() == values.max()
        assert vals.min() == values.min()
        assert np.all(np.diff(idx) > 0)

    def test_signal_tail_respects_max_points(self, model, tiny_detector_config):
        det = StreamingDetector(model, tiny_detector_config, 1000.0)
        det.ingest(np.random.default_rng(3).normal(180, 3, 40_000).astype(np.float32))
        idx, vals = det.signal_tail(max_points=200)
        assert len(vals) <= 200

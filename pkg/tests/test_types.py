import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capturenet.types import (
    CaptureAnnotation,
    CaptureRegion,
    DetectorConfig,
    Trace,
    check_sorted_disjoint,
    derive_train_step,
    downsampled_to_raw,
    raw_to_downsampled,
    round_half_up,
)


class TestRawToDownsampled:
    def test_integer_division(self):
        assert raw_to_downsampled(600, 100) == 6

    def test_zero(self):
        assert raw_to_downsampled(0, 100) == 0

    def test_full_run_scale(self):
        # a 6M-sample trace downsampled x100 yields 60k points
        assert raw_to_downsampled(6_000_000, 100) == 60_000

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            raw_to_downsampled(-1, 100)
        with pytest.raises(ValueError):
            raw_to_downsampled(5, 0)

    @given(st.integers(0, 10**9), st.integers(1, 10**4))
    def test_round_trip_on_block_boundaries(self, idx, factor):
        assert raw_to_downsampled(downsampled_to_raw(idx, factor), factor) == idx


class TestTrace:
    def test_valid(self):
        t = Trace("r1", 3, 4000.0, np.ones(10))
        assert len(t) == 10
        assert t.samples.dtype == np.float32

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Trace("r1", 1, 4000.0, np.array([]))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Trace("r1", 1, 4000.0, np.array([1.0, np.nan]))

    def test_rejects_bad_channel(self):
        with pytest.raises(ValueError):
            Trace("r1", 0, 4000.0, np.ones(5))
        with pytest.raises(ValueError):
            Trace("r1", 513, 4000.0, np.ones(5))


class TestIntervals:
    def test_annotation_ordering(self):
        with pytest.raises(ValueError):
            CaptureAnnotation(10, 10)
        with pytest.raises(ValueError):
            CaptureAnnotation(-1, 5)

    def test_region_confidence_bounds(self):
        with pytest.raises(ValueError):
            CaptureRegion(0, 10, 1.5)
        assert CaptureRegion(0, 10, 0.9).length() == 10

    def test_check_sorted_disjoint(self):
        check_sorted_disjoint([CaptureAnnotation(0, 5), CaptureAnnotation(5, 9)])
        with pytest.raises(ValueError):
            check_sorted_disjoint([CaptureAnnotation(0, 6), CaptureAnnotation(5, 9)])
        with pytest.raises(ValueError):
            check_sorted_disjoint([CaptureAnnotation(5, 9), CaptureAnnotation(0, 4)])


class TestDetectorConfig:
    def test_defaults(self):
        cfg = DetectorConfig()
        assert cfg.downsample_factor == 100
        assert cfg.window_size == 2000
        assert cfg.train_step == 2200
        assert cfg.infer_step == 2000
        assert cfg.threshold == 0.524

    def test_derived_train_step_rounds_half_up(self):
        assert derive_train_step(2000) == 2200
        assert derive_train_step(1000) == 1100
        # 1.1 * 1050 = 1155.0000...; half-up applies to .5 cases
        assert round_half_up(2.5) == 3
        assert round_half_up(2.4) == 2

    def test_rejects_bad_threshold(self):
        with pytest.raises(ValueError):
            DetectorConfig(threshold=0.0)
        with pytest.raises(ValueError):
            DetectorConfig(threshold=1.0)

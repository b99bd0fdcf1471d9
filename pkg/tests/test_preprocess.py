import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from capturenet.preprocess import (
    Window,
    decimate_strided,
    downsample,
    label_window,
    make_windows,
    normalize,
)
from capturenet.types import CaptureAnnotation


class TestDownsample:
    def test_block_means(self):
        np.testing.assert_allclose(downsample(np.array([1.0, 2, 3, 4]), 2), [1.5, 3.5])

    def test_identity_factor(self):
        np.testing.assert_array_equal(downsample(np.array([5.0, 5, 5]), 1), [5, 5, 5])

    def test_full_run_length(self):
        out = downsample(np.zeros(6_000_000, dtype=np.float32), 100)
        assert out.size == 60_000

    def test_remainder_discarded(self):
        out = downsample(np.array([1.0, 3, 5, 7, 100]), 2)
        np.testing.assert_allclose(out, [2.0, 6.0])

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="empty trace"):
            downsample(np.array([]), 10)

    @given(
        arrays(np.float64, st.integers(1, 500),
               elements=st.floats(-1e3, 1e3, allow_nan=False)),
        st.integers(1, 50),
    )
    def test_block_mean_conservation(self, x, factor):
        # mean of output equals mean of the consumed prefix
        n_blocks = x.size // factor
        if n_blocks == 0:
            with pytest.raises(ValueError):
                downsample(x, factor)
            return
        out = downsample(x, factor)
        np.testing.assert_allclose(
            out.mean(), x[: n_blocks * factor].mean(), rtol=1e-9, atol=1e-12
        )

    def test_strided_variant(self):
        np.testing.assert_array_equal(
            decimate_strided(np.array([1.0, 2, 3, 4, 5, 6]), 2), [1, 3, 5]
        )


class TestNormalize:
    def test_characteristic_levels(self):
        # open pore ~180 pA, capture ~20 pA, closed ~5 pA
        np.testing.assert_allclose(
            normalize(np.array([180.0, 20.0, 5.0]), 200.0), [0.9, 0.1, 0.025]
        )

    def test_zero(self):
        np.testing.assert_array_equal(normalize(np.array([0.0]), 200.0), [0.0])

    def test_unit(self):
        np.testing.assert_allclose(normalize(np.array([200.0]), 200.0), [1.0])

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            normalize(np.ones(3), 0.0)


class TestMakeWindows:
    def test_exact_tiling(self):
        ws = make_windows(np.zeros(60_000), 2000, 2000)
        assert len(ws) == 30
        assert [w.ds_start for w in ws[:3]] == [0, 2000, 4000]
        assert ws[-1].ds_start == 58_000

    def test_training_stride_with_tail(self):
        ws = make_windows(np.zeros(60_000), 2000, 2200)
        # 27 regular starts (0..57200 step 2200) plus one end-aligned window
        assert len(ws) == 28
        assert ws[26].ds_start == 57_200
        assert ws[-1].ds_start == 58_000
        assert ws[-1].ds_end == 60_000

    def test_training_grid_drops_tail(self):
        ws = make_windows(np.zeros(60_000), 2000, 2200, end_aligned=False)
        assert len(ws) == 27

    def test_exact_fit_single_window(self):
        ws = make_windows(np.zeros(2000), 2000, 2000)
        assert len(ws) == 1 and ws[0].ds_start == 0

    def test_too_short(self):
        with pytest.raises(ValueError, match="trace too short"):
            make_windows(np.zeros(10), 2000, 2000)

    @given(st.integers(5, 400), st.integers(5, 60), st.integers(1, 80))
    @settings(max_examples=200)
    def test_windows_ordered_and_sized(self, n, window, step):
        if window > n:
            return
        ws = make_windows(np.arange(n, dtype=float), window, step)
        for w in ws:
            assert w.values.size == window
        starts = [w.ds_start for w in ws]
        assert starts == sorted(starts)

    @given(st.integers(5, 400), st.integers(5, 60))
    @settings(max_examples=200)
    def test_inference_coverage_with_end_alignment(self, n, window):
        # at the inference stride (step == window) the end-aligned tail
        # guarantees every index is covered; training strides > window
        # intentionally leave gaps instead
        if window > n:
            return
        ws = make_windows(np.arange(n, dtype=float), window, window)
        covered = np.zeros(n, dtype=bool)
        for w in ws:
            covered[w.ds_start : w.ds_end] = True
        assert covered.all()


class TestLabelWindow:
    def test_exact_half_overlap_is_capture(self):
        ann = [CaptureAnnotation(100_000, 300_000)]
        assert label_window((0, 200_000), ann) == 1

    def test_no_annotations(self):
        assert label_window((0, 200_000), []) == 0

    def test_full_overlap(self):
        assert label_window((0, 200_000), [CaptureAnnotation(0, 200_000)]) == 1

    def test_just_under_half(self):
        ann = [CaptureAnnotation(100_001, 300_000)]
        assert label_window((0, 200_000), ann) == 0

    def test_multiple_annotations_sum(self):
        # two disjoint annotations jointly covering half the window
        ann = [CaptureAnnotation(0, 50_000), CaptureAnnotation(100_000, 150_000)]
        assert label_window((0, 200_000), ann) == 1

    @given(
        st.integers(0, 500), st.integers(1, 500),
        st.integers(0, 500), st.integers(1, 200), st.integers(0, 100),
    )
    def test_monotone_in_annotation_growth(self, w_start, w_len, a_start, a_len, grow):
        window = (w_start, w_start + w_len)
        base = [CaptureAnnotation(a_start, a_start + a_len)]
        grown = [CaptureAnnotation(max(0, a_start - grow), a_start + a_len + grow)]
        assert label_window(window, grown) >= label_window(window, base)


class TestWindowType:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Window("r", 1, 0, np.array([np.inf, 1.0]))

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capturenet.metrics import evaluate, maximize_score, mean_region_iou
from capturenet.types import CaptureAnnotation, CaptureRegion


def confusion_oracle(preds, truth):
    tp = fp = tn = fn = 0
    for p, t in zip(preds, truth):
        if p == 1 and t == 1:
            tp += 1
        elif p == 1 and t == 0:
            fp += 1
        elif p == 0 and t == 0:
            tn += 1
        else:
            fn += 1
    return tp, fp, tn, fn


class TestEvaluate:
    def test_hand_counted_example(self):
        r = evaluate([1, 1, 0, 0], [1, 0, 0, 1])
        assert (r.tp, r.fp, r.tn, r.fn) == (1, 1, 1, 1)
        assert r.accuracy == 50.0
        assert r.precision == 50.0
        assert r.recall == 50.0
        assert r.f1 == pytest.approx(0.5)

    def test_perfect(self):
        r = evaluate([1, 0, 1], [1, 0, 1])
        assert r.accuracy == 100.0 and r.precision == 100.0
        assert r.recall == 100.0 and r.f1 == 1.0
        assert r.maximize_score == pytest.approx(100.0)

    def test_degenerate_all_negative_preds(self):
        r = evaluate([0, 0, 0], [1, 0, 1])
        assert r.precision == 0.0 and r.recall == 0.0 and r.f1 == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            evaluate([1, 0], [1])

    def test_counts_sum_to_n(self):
        r = evaluate([1, 0, 1, 1], [0, 0, 1, 1])
        assert r.n_windows == 4

    def test_against_oracle_random_pairs(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(1, 50))
            preds = rng.integers(0, 2, n).tolist()
            truth = rng.integers(0, 2, n).tolist()
            r = evaluate(preds, truth)
            assert (r.tp, r.fp, r.tn, r.fn) == confusion_oracle(preds, truth)


class TestMaximizeScore:
    def test_all_perfect(self):
        assert maximize_score(100, 100, 100, 1.0) == pytest.approx(100.0)

    def test_reference_operating_point(self):
        # published deep-CNN row recomputes to 93.82 from rounded inputs
        assert maximize_score(93.19, 93.39, 95.39, 0.94) == pytest.approx(93.82, abs=0.005)

    def test_zero(self):
        assert maximize_score(0, 0, 0, 0) == 0.0

    @given(
        st.floats(0, 100), st.floats(0, 100), st.floats(0, 100), st.floats(0, 1),
        st.floats(0, 5), st.integers(0, 3),
    )
    def test_monotone_nondecreasing(self, acc, prec, rec, f1, delta, which):
        base = maximize_score(acc, prec, rec, f1)
        args = [acc, prec, rec, f1]
        args[which] = min(args[which] + delta, 1.0 if which == 3 else 100.0)
        assert maximize_score(*args) >= base - 1e-12


class TestMeanRegionIoU:
    def test_exact_match(self):
        anns = [CaptureAnnotation(0, 100)]
        regs = [CaptureRegion(0, 100, 0.9)]
        assert mean_region_iou(regs, anns) == pytest.approx(1.0)

    def test_no_predictions(self):
        assert mean_region_iou([], [CaptureAnnotation(0, 100)]) == 0.0

    def test_no_annotations(self):
        assert mean_region_iou([CaptureRegion(0, 100, 0.9)], []) == 0.0

    def test_half_overlap(self):
        anns = [CaptureAnnotation(0, 100)]
        regs = [CaptureRegion(50, 150, 0.9)]
        assert mean_region_iou(regs, anns) == pytest.approx(50 / 150)

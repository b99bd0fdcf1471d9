"""Classification metrics and the precision-weighted selection score."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .types import CaptureAnnotation, CaptureRegion, MetricsReport


def evaluate(preds: Sequence[int], truth: Sequence[int]) -> MetricsReport:
    """Confusion counts and percent-scale scores from binary label vectors.

    Degenerate denominators yield 0 (e.g. precision with no positive
    predictions), keeping every field defined for all-negative or
    all-positive inputs.
    """
    p = np.asarray(preds)
    t = np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("empty label vectors")
    tp = int(np.sum((p == 1) & (t == 1)))
    fp = int(np.sum((p == 1) & (t == 0)))
    tn = int(np.sum((p == 0) & (t == 0)))
    fn = int(np.sum((p == 0) & (t == 1)))
    n = tp + fp + tn + fn
    accuracy = 100.0 * (tp + tn) / n
    precision = 100.0 * tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (
        2.0 * precision * recall / (precision + recall) / 100.0
        if precision + recall > 0
        else 0.0
    )
    return MetricsReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        maximize_score=maximize_score(accuracy, precision, recall, f1),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


def maximize_score(acc: float, prec: float, rec: float, f1: float) -> float:
    """Model-selection objective (Acc + 3*Prec + Rec + 2*F1) / 7.

    Accuracy, precision and recall are on the 0..100 scale while F1 arrives
    in 0..1, so F1 enters scaled x100; precision carries the highest weight
    to prioritize clean (low false positive) detections.
    """
    return (acc + 3.0 * prec + rec + 2.0 * (f1 * 100.0)) / 7.0


def mean_region_iou(
    predicted: Sequence[CaptureRegion],
    annotations: Sequence[CaptureAnnotation],
) -> float:
    """Mean, over annotations, of the best single-region IoU.

    Boundary-quality diagnostic only; window-level metrics drive model
    selection. Returns 0.0 when there are no annotations.
    """
    if not annotations:
        return 0.0
    total = 0.0
    for ann in annotations:
        best = 0.0
        for reg in predicted:
            inter = min(ann.end_raw, reg.end_raw) - max(ann.start_raw, reg.start_raw)
            if inter <= 0:
                continue
            union = max(ann.end_raw, reg.end_raw) - min(ann.start_raw, reg.start_raw)
            best = max(best, inter / union)
        total += best
    return total / len(annotations)

"""Offline detection and evaluation entry points.

Offline detection drives the streaming detector with the whole trace as one
chunk, so file-based and live results are the same code path by
construction. Window-level evaluation uses the batched functional path
(downsample -> windows -> batch forward -> threshold) since metrics are
computed on pre-smoothing labels.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .datasets import AnnotatedTrace, inference_windows
from .fileio import DetectionExport, make_export
from .metrics import evaluate, mean_region_iou
from .postprocess import WindowPrediction, aggregate_regions, smooth_labels, threshold_labels
from .streaming import DeadPoreRule, StreamingDetector
from .types import CaptureRegion, DetectorConfig, MetricsReport, Trace


def model_id(model) -> str:
    """Stable identifier: architecture plus a digest of the parameter bytes."""
    h = hashlib.sha256()
    for name in sorted(model.params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(model.params[name], dtype="<f4").tobytes())
    return f"{model.architecture}:{h.hexdigest()[:12]}"


def config_snapshot(model, config: DetectorConfig, threshold: Optional[float] = None) -> dict:
    return {
        "threshold": config.threshold if threshold is None else threshold,
        "window_size": config.window_size,
        "downsample_factor": config.downsample_factor,
        "model_id": model_id(model),
    }


@dataclass
class DetectionResult:
    run_id: str
    channel: int
    status: str
    regions: list[CaptureRegion]
    window_preds: list[WindowPrediction] = field(repr=False)
    ds_total: int = 0

    def to_export(self, model, config: DetectorConfig) -> DetectionExport:
        return make_export(
            run_id=self.run_id,
            channel=self.channel,
            status=self.status,
            regions=self.regions,
            config=config_snapshot(model, config),
        )


def detect_trace(
    trace: Trace,
    model,
    config: DetectorConfig,
    dead_rule: DeadPoreRule = DeadPoreRule(),
) -> DetectionResult:
    """Full offline detection of one trace."""
    det = StreamingDetector(
        model,
        config,
        sample_rate_hz=trace.sample_rate_hz,
        run_id=trace.run_id,
        channel=trace.channel,
        dead_rule=dead_rule,
    )
    det.ingest(trace.samples)
    det.finish()
    return DetectionResult(
        run_id=trace.run_id,
        channel=trace.channel,
        status=det.status,
        regions=det.regions(),
        window_preds=det.window_predictions(),
        ds_total=det.ds_total,
    )


@dataclass
class EvalResult:
    metrics: MetricsReport
    mean_iou: float
    n_runs: int
    n_windows: int


def evaluate_runs(
    runs: Sequence[AnnotatedTrace],
    model,
    config: DetectorConfig,
    threshold: Optional[float] = None,
) -> EvalResult:
    """Window-level metrics over annotated runs.

    Predictions are thresholded probabilities on the tiling inference grid,
    before smoothing (smoothing is a deployment heuristic, not part of the
    classifier under evaluation). The boundary-quality IoU against the
    detected regions is reported alongside as a diagnostic.
    """
    thr = config.threshold if threshold is None else threshold
    preds: list[int] = []
    truth: list[int] = []
    iou_total = 0.0
    iou_count = 0
    for run in runs:
        windows = inference_windows(run, config)
        x = np.stack([w.values for w in windows]).astype(np.float32)
        probs = model.predict_proba(x)
        labels = threshold_labels(probs, thr)
        preds.extend(labels)
        truth.extend(w.label for w in windows)
        if run.annotations:
            wp = [
                WindowPrediction(w.ds_start, w.ds_end, float(p), lab)
                for w, p, lab in zip(windows, probs, smooth_labels(labels))
            ]
            regions = aggregate_regions(wp, config.downsample_factor)
            iou_total += mean_region_iou(regions, run.annotations) * len(run.annotations)
            iou_count += len(run.annotations)
    metrics = evaluate(preds, truth)
    return EvalResult(
        metrics=metrics,
        mean_iou=iou_total / iou_count if iou_count else 0.0,
        n_runs=len(runs),
        n_windows=len(preds),
    )

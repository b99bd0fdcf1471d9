"""Random hyperparameter search over the standard spaces.

Trials are mutually independent: trial i derives its own seed from
(search seed, i), so any subset can run in any order, or in parallel, and
produce the same results. The sampler is pluggable in principle (swap
``sample_config``); plain random search is what ships.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .baseline import HistogramLogistic
from .datasets import AnnotatedTrace, build_balanced_dataset, split_runs
from .nn.model import POOLING_PRODUCT, CaptureNetDeep
from .pipeline import evaluate_runs
from .training import TrainConfig, train_model
from .types import DetectorConfig, round_half_up

BATCH_CHOICES = (32, 64, 128, 256, 512, 1024)


@dataclass(frozen=True)
class SearchSpace:
    window_size: tuple[int, int] = (1000, 3000)
    lr: tuple[float, float] = (1e-5, 1e-2)
    weight_decay: tuple[float, float] = (1e-6, 1e-2)
    batch_sizes: tuple[int, ...] = BATCH_CHOICES
    dropout: tuple[float, float] = (0.0, 0.8)
    threshold: tuple[float, float] = (0.3, 0.7)
    bin_count: tuple[int, int] = (10, 200)  # histogram models only
    architecture: str = "capturenet-deep"


@dataclass(frozen=True)
class TrialConfig:
    window_size: int
    lr: float
    weight_decay: float
    batch_size: int
    dropout: float
    threshold: float
    bin_count: int
    architecture: str


@dataclass
class TrialResult:
    trial_id: int
    config: TrialConfig
    score: float
    metrics: Optional[dict]
    wall_time_s: float
    error: Optional[str] = None

    def as_dict(self) -> dict:
        # failed trials carry -inf, which is not valid JSON; persist as null
        return {
            "trial_id": self.trial_id,
            "config": asdict(self.config),
            "score": self.score if np.isfinite(self.score) else None,
            "metrics": self.metrics,
            "wall_time_s": self.wall_time_s,
            "error": self.error,
        }


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def _round_window(w: int, bounds: tuple[int, int]) -> int:
    """Nearest multiple of the pooling product, kept inside the bounds."""
    snapped = round_half_up(w / POOLING_PRODUCT) * POOLING_PRODUCT
    lo = ((bounds[0] + POOLING_PRODUCT - 1) // POOLING_PRODUCT) * POOLING_PRODUCT
    hi = (bounds[1] // POOLING_PRODUCT) * POOLING_PRODUCT
    return int(min(max(snapped, lo), hi))


def sample_config(space: SearchSpace, rng: np.random.Generator) -> TrialConfig:
    """One independent draw per dimension; log-uniform for lr and decay."""
    raw_window = int(rng.integers(space.window_size[0], space.window_size[1] + 1))
    return TrialConfig(
        window_size=_round_window(raw_window, space.window_size),
        lr=_log_uniform(rng, *space.lr),
        weight_decay=_log_uniform(rng, *space.weight_decay),
        batch_size=int(rng.choice(space.batch_sizes)),
        dropout=float(rng.uniform(*space.dropout)),
        threshold=float(rng.uniform(*space.threshold)),
        bin_count=int(rng.integers(space.bin_count[0], space.bin_count[1] + 1)),
        architecture=space.architecture,
    )


def trial_seed(seed: int, trial_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, trial_id])


def _build_model(cfg: TrialConfig, scale_pa: float, seed: int):
    if cfg.architecture == "capturenet-deep":
        return CaptureNetDeep(window_size=cfg.window_size, dropout=cfg.dropout, seed=seed)
    if cfg.architecture == "histogram-logistic":
        return HistogramLogistic(bin_count=cfg.bin_count, scale_pa=scale_pa, seed=seed)
    raise ValueError(f"unknown architecture {cfg.architecture!r}")


def run_trial(
    trial_id: int,
    runs: Sequence[AnnotatedTrace],
    space: SearchSpace,
    seed: int,
    epoch_cap: int = 150,
    patience: int = 50,
    base_config: DetectorConfig = DetectorConfig(),
) -> TrialResult:
    """Sample a configuration, train it, and score it on validation runs."""
    ss = trial_seed(seed, trial_id)
    rng = np.random.default_rng(ss)
    cfg = sample_config(space, rng)
    derived = int(ss.generate_state(1)[0])
    t0 = time.monotonic()
    try:
        det_cfg = DetectorConfig(
            downsample_factor=base_config.downsample_factor,
            window_size=cfg.window_size,
            threshold=cfg.threshold,
            normalization_scale_pa=base_config.normalization_scale_pa,
        )
        split = split_runs([r.run_id for r in runs], seed=seed)
        by_id = {r.run_id: r for r in runs}
        train_runs = [by_id[i] for i in sorted(split.train)]
        val_runs = [by_id[i] for i in sorted(split.val)]
        train_ds = build_balanced_dataset(train_runs, det_cfg, seed=derived,
                                          allowed_run_ids=split.train)
        val_ds = build_balanced_dataset(val_runs, det_cfg, seed=derived,
                                        allowed_run_ids=split.val)
        model = _build_model(cfg, base_config.normalization_scale_pa, derived)
        train_model(
            model,
            train_ds,
            val_ds,
            TrainConfig(
                batch_size=cfg.batch_size,
                lr=cfg.lr,
                weight_decay=cfg.weight_decay,
                max_epochs=epoch_cap,
                patience=min(patience, epoch_cap),
            ),
            seed=derived,
        )
        result = evaluate_runs(val_runs, model, det_cfg, threshold=cfg.threshold)
        return TrialResult(
            trial_id=trial_id,
            config=cfg,
            score=result.metrics.maximize_score,
            metrics=result.metrics.as_dict(),
            wall_time_s=time.monotonic() - t0,
        )
    except Exception as exc:  # a failed trial must not sink the search
        return TrialResult(
            trial_id=trial_id,
            config=cfg,
            score=float("-inf"),
            metrics=None,
            wall_time_s=time.monotonic() - t0,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_search(
    runs: Sequence[AnnotatedTrace],
    space: SearchSpace = SearchSpace(),
    n_trials: int = 40,
    seed: int = 0,
    epoch_cap: int = 150,
    base_config: DetectorConfig = DetectorConfig(),
    out_path=None,
) -> tuple[TrialResult, list[TrialResult]]:
    """Run the full budget; best trial by score, ties to the lower id."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    results = [
        run_trial(i, runs, space, seed, epoch_cap=epoch_cap, base_config=base_config)
        for i in range(n_trials)
    ]
    if out_path is not None:
        write_trials(results, out_path)
    best = max(results, key=lambda r: (r.score, -r.trial_id))
    return best, results


def write_trials(results: Sequence[TrialResult], path) -> None:
    with open(path, "w") as f:
        for r in results:
            f.write(json.dumps(r.as_dict()) + "\n")


def read_trials(path) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]

"""Synthetic nanopore trace generator.

Reproduces the characteristic phase morphology of protein sequencing
current traces: an open pore baseline near 180 pA, a suppressed closed-pore
state near 5 pA, noisy sustained capture phases near 20 pA with brief drops
to near zero, and step-like translocation phases. Phase levels come from
the observed signal behavior; noise widths, drop statistics, and duration
bounds are configurable engineering defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .types import CaptureAnnotation, Trace

PHASE_KINDS = ("open", "closed", "capture", "translocation")


@dataclass(frozen=True)
class PhaseSpec:
    """One phase of a generated trace."""

    kind: str
    duration_samples: int
    level_pa: float
    noise_sd_pa: float
    # capture only
    drop_rate_hz: float = 0.0
    drop_depth_pa: tuple[float, float] = (0.0, 2.0)
    drop_duration_samples: tuple[int, int] = (20, 80)
    # translocation only
    step_period_samples: tuple[int, int] = (200, 800)
    step_level_range_pa: tuple[float, float] = (15.0, 40.0)

    def __post_init__(self) -> None:
        if self.kind not in PHASE_KINDS:
            raise ValueError(f"unknown phase kind {self.kind!r}")
        if self.duration_samples <= 0:
            raise ValueError("duration_samples must be positive")
        if self.noise_sd_pa < 0:
            raise ValueError("noise_sd_pa must be non-negative")


@dataclass(frozen=True)
class SimParams:
    """Default morphology parameters for run generation."""

    sample_rate_hz: float = 4000.0
    open_level_pa: float = 180.0
    open_sd_pa: float = 3.0
    closed_level_pa: float = 5.0
    closed_sd_pa: float = 1.0
    capture_level_pa: float = 20.0
    capture_sd_pa: float = 5.0
    drop_rate_hz: float = 2.0
    drop_depth_pa: tuple[float, float] = (0.0, 2.0)
    drop_duration_s: tuple[float, float] = (0.005, 0.02)
    transloc_sd_pa: float = 2.0
    step_period_s: tuple[float, float] = (0.05, 0.2)
    step_level_range_pa: tuple[float, float] = (15.0, 40.0)
    capture_duration_s: tuple[float, float] = (80.0, 300.0)
    transloc_duration_s: tuple[float, float] = (20.0, 90.0)
    transloc_prob: float = 0.5
    closed_prob: float = 0.5
    closed_frac: tuple[float, float] = (0.15, 0.4)
    min_filler_s: float = 20.0

    def seconds_to_samples(self, s: float) -> int:
        return max(1, int(round(s * self.sample_rate_hz)))


def _render_phase(phase: PhaseSpec, rng: np.random.Generator,
                  sample_rate_hz: float) -> np.ndarray:
    n = phase.duration_samples
    out = rng.normal(phase.level_pa, phase.noise_sd_pa, n)
    if phase.kind == "capture":
        # sustained capture current stays positive; near-zero excursions
        # come only from the injected drops
        np.maximum(out, 0.5, out=out)
        n_drops = rng.poisson(phase.drop_rate_hz * n / sample_rate_hz)
        for _ in range(n_drops):
            start = int(rng.integers(0, n))
            dur = int(rng.integers(phase.drop_duration_samples[0],
                                   phase.drop_duration_samples[1] + 1))
            depth = rng.uniform(*phase.drop_depth_pa)
            seg = rng.normal(depth, 0.5, min(dur, n - start))
            out[start : start + seg.size] = np.maximum(seg, 0.0)
    elif phase.kind == "translocation":
        t = 0
        while t < n:
            period = int(rng.integers(phase.step_period_samples[0],
                                      phase.step_period_samples[1] + 1))
            level = rng.uniform(*phase.step_level_range_pa)
            seg_len = min(period, n - t)
            out[t : t + seg_len] = rng.normal(level, phase.noise_sd_pa, seg_len)
            t += seg_len
    return out


def generate_trace(
    phases: Sequence[PhaseSpec],
    sample_rate_hz: float,
    seed: int,
    run_id: str = "sim",
    channel: int = 1,
) -> tuple[Trace, list[CaptureAnnotation]]:
    """Concatenate phases into a trace; annotations are the exact sample
    spans of the capture phases. Deterministic per seed."""
    if not phases:
        raise ValueError("at least one phase required")
    rng = np.random.default_rng(seed)
    chunks = []
    annotations = []
    offset = 0
    for phase in phases:
        chunks.append(_render_phase(phase, rng, sample_rate_hz))
        if phase.kind == "capture":
            annotations.append(
                CaptureAnnotation(start_raw=offset, end_raw=offset + phase.duration_samples)
            )
        offset += phase.duration_samples
    samples = np.concatenate(chunks).astype(np.float32)
    trace = Trace(run_id=run_id, channel=channel, sample_rate_hz=sample_rate_hz,
                  samples=samples)
    return trace, annotations


def _filler_phases(duration: int, params: SimParams,
                   rng: np.random.Generator) -> list[PhaseSpec]:
    """Open-pore filler, occasionally interrupted by a closed-pore stretch."""
    open_phase = lambda d: PhaseSpec("open", d, params.open_level_pa, params.open_sd_pa)
    min_piece = params.seconds_to_samples(params.min_filler_s)
    if duration >= 3 * min_piece and rng.random() < params.closed_prob:
        closed_len = int(duration * rng.uniform(*params.closed_frac))
        # keep head and tail at least min_piece long
        closed_len = min(max(closed_len, 1), duration - 2 * min_piece)
        head = int(rng.integers(min_piece, duration - closed_len - min_piece + 1))
        tail = duration - head - closed_len
        return [
            open_phase(head),
            PhaseSpec("closed", closed_len, params.closed_level_pa, params.closed_sd_pa),
            open_phase(tail),
        ]
    return [open_phase(duration)]


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def generate_run(
    n_captures: int,
    total_samples: int,
    seed: int,
    params: SimParams = SimParams(),
    run_id: str = "sim",
    channel: int = 1,
) -> tuple[Trace, list[CaptureAnnotation]]:
    """Generate a full run with exactly ``n_captures`` capture phases.

    Phases interleave open/closed filler with captures; a translocation
    phase, when present, immediately follows its capture. Capture durations
    are drawn log-uniform within bounds so short, hard captures occur. The
    output length equals ``total_samples`` exactly.

    Raises ValueError when captures plus minimum filler cannot fit.
    """
    if n_captures < 0:
        raise ValueError("n_captures must be >= 0")
    if total_samples < 1:
        raise ValueError("total_samples must be >= 1")
    rng = np.random.default_rng(seed)
    phase_rng_seed = int(rng.integers(0, 2**63 - 1))

    if n_captures == 0:
        phases = _filler_phases(total_samples, params, rng)
        return generate_trace(phases, params.sample_rate_hz, phase_rng_seed,
                              run_id=run_id, channel=channel)

    cap_lo, cap_hi = (params.seconds_to_samples(s) for s in params.capture_duration_s)
    min_filler = params.seconds_to_samples(params.min_filler_s)
    n_fillers = n_captures + 1

    cap_durs = [int(_log_uniform(rng, cap_lo, cap_hi)) for _ in range(n_captures)]
    tr_durs = []
    for _ in range(n_captures):
        if rng.random() < params.transloc_prob:
            lo, hi = (params.seconds_to_samples(s) for s in params.transloc_duration_s)
            tr_durs.append(int(_log_uniform(rng, lo, hi)))
        else:
            tr_durs.append(0)

    committed = sum(cap_durs) + sum(tr_durs)
    spare = total_samples - committed - n_fillers * min_filler
    if spare < 0:
        raise ValueError(
            f"infeasible layout: {n_captures} captures need {committed} samples "
            f"plus {n_fillers * min_filler} filler, but only {total_samples} available"
        )
    shares = rng.dirichlet(np.ones(n_fillers)) * spare
    filler_durs = [min_filler + int(s) for s in shares]
    filler_durs[0] += total_samples - committed - sum(filler_durs)

    phases: list[PhaseSpec] = []
    phases.extend(_filler_phases(filler_durs[0], params, rng))
    for i in range(n_captures):
        phases.append(
            PhaseSpec(
                "capture",
                cap_durs[i],
                params.capture_level_pa,
                params.capture_sd_pa,
                drop_rate_hz=params.drop_rate_hz,
                drop_depth_pa=params.drop_depth_pa,
                drop_duration_samples=(
                    params.seconds_to_samples(params.drop_duration_s[0]),
                    params.seconds_to_samples(params.drop_duration_s[1]),
                ),
            )
        )
        if tr_durs[i]:
            phases.append(
                PhaseSpec(
                    "translocation",
                    tr_durs[i],
                    params.capture_level_pa,
                    params.transloc_sd_pa,
                    step_period_samples=(
                        params.seconds_to_samples(params.step_period_s[0]),
                        params.seconds_to_samples(params.step_period_s[1]),
                    ),
                    step_level_range_pa=params.step_level_range_pa,
                )
            )
        phases.extend(_filler_phases(filler_durs[i + 1], params, rng))

    trace, annotations = generate_trace(phases, params.sample_rate_hz, phase_rng_seed,
                                        run_id=run_id, channel=channel)
    assert len(trace) == total_samples
    assert len(annotations) == n_captures
    return trace, annotations

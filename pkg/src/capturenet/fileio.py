"""Native file formats: traces (text and binary), annotations, detections.

Instrument container formats are deliberately not parsed here; traces are
exchanged in a simple text format or a compact versioned binary one.
Readers validate eagerly and fail with positioned errors; there are no
partial silent reads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .datasets import AnnotatedTrace
from .types import CaptureAnnotation, CaptureRegion, Trace, check_sorted_disjoint

TRACE_BIN_MAGIC = b"NPTR"
TRACE_BIN_VERSION = 1
TRACE_BIN_SUFFIX = ".nptr"
TRACE_CSV_SUFFIX = ".csv"
ANNOTATION_SUFFIX = ".annotations.json"
DETECTION_SCHEMA_VERSION = 1


class TraceFormatError(ValueError):
    pass


# -- text trace format ---------------------------------------------------------

REQUIRED_METADATA = ("run_id", "channel", "sample_rate_hz")


def write_trace_csv(trace: Trace, path) -> None:
    """Comment metadata lines, a ``current_pa`` header, one value per line.

    Values are written with 6 significant digits, which bounds round-trip
    error at 1e-6 relative.
    """
    with open(path, "w") as f:
        f.write(f"# run_id={trace.run_id}\n")
        f.write(f"# channel={trace.channel}\n")
        f.write(f"# sample_rate_hz={trace.sample_rate_hz!r}\n")
        f.write("current_pa\n")
        np.savetxt(f, trace.samples, fmt="%.6g")


def read_trace_csv(path) -> Trace:
    path = Path(path)
    meta: dict[str, str] = {}
    header_line = None
    values_start = None
    with open(path) as f:
        lines = f.readlines()
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if header_line is not None:
                raise TraceFormatError(
                    f"{path}:{lineno}: comment after header is not allowed"
                )
            body = stripped[1:].strip()
            if "=" not in body:
                raise TraceFormatError(f"{path}:{lineno}: malformed metadata line")
            key, _, value = body.partition("=")
            meta[key.strip()] = value.strip()
            continue
        header_line = lineno
        if stripped != "current_pa":
            raise TraceFormatError(
                f"{path}:{lineno}: expected header 'current_pa', got {stripped!r}"
            )
        values_start = lineno + 1
        break
    if header_line is None:
        raise TraceFormatError(f"{path}: missing 'current_pa' header")
    for key in REQUIRED_METADATA:
        if key not in meta:
            raise TraceFormatError(f"{path}: missing metadata: {key}")

    values = []
    for lineno, line in enumerate(lines[values_start - 1 :], start=values_start):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            values.append(float(stripped))
        except ValueError:
            raise TraceFormatError(
                f"{path}:{lineno}: non-numeric sample value {stripped!r}"
            ) from None
    if not values:
        raise TraceFormatError(f"{path}: no sample values")
    try:
        channel = int(meta["channel"])
        rate = float(meta["sample_rate_hz"])
    except ValueError as exc:
        raise TraceFormatError(f"{path}: bad metadata value ({exc})") from None
    return Trace(run_id=meta["run_id"], channel=channel, sample_rate_hz=rate,
                 samples=np.array(values, dtype=np.float32))


# -- binary trace format -------------------------------------------------------
#
# Little-endian layout (documented in docs/formats.md):
#   magic "NPTR" | u32 version=1 | u32 channel | u64 run_id length |
#   run_id UTF-8 | f64 sample_rate_hz | u64 n_samples | f32 * n_samples


def write_trace_bin(trace: Trace, path) -> None:
    run_id = trace.run_id.encode()
    with open(path, "wb") as f:
        f.write(TRACE_BIN_MAGIC)
        f.write(struct.pack("<I", TRACE_BIN_VERSION))
        f.write(struct.pack("<I", trace.channel))
        f.write(struct.pack("<Q", len(run_id)))
        f.write(run_id)
        f.write(struct.pack("<d", trace.sample_rate_hz))
        f.write(struct.pack("<Q", len(trace)))
        f.write(np.ascontiguousarray(trace.samples, dtype="<f4").tobytes())


def _read_exact(f, n: int, path, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise TraceFormatError(f"{path}: truncated trace file (while reading {what})")
    return buf


def read_trace_bin(path) -> Trace:
    path = Path(path)
    with open(path, "rb") as f:
        if _read_exact(f, 4, path, "magic") != TRACE_BIN_MAGIC:
            raise TraceFormatError(f"{path}: not a trace file")
        (version,) = struct.unpack("<I", _read_exact(f, 4, path, "version"))
        if version != TRACE_BIN_VERSION:
            raise TraceFormatError(f"{path}: unsupported trace version {version}")
        (channel,) = struct.unpack("<I", _read_exact(f, 4, path, "channel"))
        (rid_len,) = struct.unpack("<Q", _read_exact(f, 8, path, "run_id length"))
        run_id = _read_exact(f, rid_len, path, "run_id").decode()
        (rate,) = struct.unpack("<d", _read_exact(f, 8, path, "sample_rate_hz"))
        (n,) = struct.unpack("<Q", _read_exact(f, 8, path, "sample count"))
        data = np.frombuffer(_read_exact(f, 4 * n, path, "samples"), dtype="<f4")
        if f.read(1):
            raise TraceFormatError(f"{path}: trailing bytes after samples")
    return Trace(run_id=run_id, channel=channel, sample_rate_hz=rate,
                 samples=data.copy())


def read_trace(path) -> Trace:
    """Dispatch on suffix: .nptr binary, anything else text."""
    path = Path(path)
    if path.suffix == TRACE_BIN_SUFFIX:
        return read_trace_bin(path)
    return read_trace_csv(path)


# -- annotations ----------------------------------------------------------------


def write_annotations(run_id: str, channel: int,
                      captures: Sequence[CaptureAnnotation], path) -> None:
    doc = {
        "run_id": run_id,
        "channel": channel,
        "captures": [{"start": a.start_raw, "end": a.end_raw} for a in captures],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def read_annotations(path) -> tuple[str, int, list[CaptureAnnotation]]:
    path = Path(path)
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"{path}: invalid JSON ({exc})") from None
    for key in ("run_id", "channel", "captures"):
        if key not in doc:
            raise TraceFormatError(f"{path}: missing field {key!r}")
    captures = []
    for i, entry in enumerate(doc["captures"]):
        try:
            captures.append(CaptureAnnotation(start_raw=int(entry["start"]),
                                              end_raw=int(entry["end"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise TraceFormatError(f"{path}: bad capture entry {i}: {exc}") from None
    prev = None
    for i, ann in enumerate(captures):
        if prev is not None:
            if ann.start_raw < prev.start_raw:
                raise TraceFormatError(f"{path}: unordered annotations at entry {i}")
            if ann.start_raw < prev.end_raw:
                raise TraceFormatError(f"{path}: overlapping annotations at entry {i}")
        prev = ann
    return doc["run_id"], int(doc["channel"]), captures


# -- detection export ------------------------------------------------------------

CHANNEL_STATUSES = ("active", "capture", "dead", "translocating")


@dataclass(frozen=True)
class DetectionExport:
    """Per-channel detection output: regions, confidences, pore status."""

    run_id: str
    channel: int
    status: str
    dead: bool
    captures: tuple[CaptureRegion, ...]
    generated_at: str
    config: dict
    translocations: tuple = ()

    def __post_init__(self) -> None:
        if self.status not in CHANNEL_STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.dead != (self.status == "dead"):
            raise ValueError("dead flag inconsistent with status")
        check_sorted_disjoint(self.captures)

    def as_dict(self) -> dict:
        return {
            "schema_version": DETECTION_SCHEMA_VERSION,
            "run_id": self.run_id,
            "channel": self.channel,
            "status": self.status,
            "dead": self.dead,
            "captures": [
                {
                    "start_raw": r.start_raw,
                    "end_raw": r.end_raw,
                    "confidence": r.confidence,
                }
                for r in self.captures
            ],
            "translocations": list(self.translocations),
            "generated_at": self.generated_at,
            "config": self.config,
        }


def make_export(
    run_id: str,
    channel: int,
    status: str,
    regions: Sequence[CaptureRegion],
    config: dict,
    generated_at: Optional[str] = None,
) -> DetectionExport:
    return DetectionExport(
        run_id=run_id,
        channel=channel,
        status=status,
        dead=status == "dead",
        captures=tuple(regions),
        generated_at=generated_at or datetime.now(timezone.utc).isoformat(),
        config=config,
    )


def write_detections(export: DetectionExport, path) -> None:
    with open(path, "w") as f:
        json.dump(export.as_dict(), f, indent=2)
        f.write("\n")


def read_detections(path) -> DetectionExport:
    path = Path(path)
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"{path}: invalid JSON ({exc})") from None
    if doc.get("schema_version") != DETECTION_SCHEMA_VERSION:
        raise TraceFormatError(
            f"{path}: unsupported detection schema version {doc.get('schema_version')!r}"
        )
    try:
        captures = tuple(
            CaptureRegion(c["start_raw"], c["end_raw"], c["confidence"])
            for c in doc["captures"]
        )
        return DetectionExport(
            run_id=doc["run_id"],
            channel=int(doc["channel"]),
            status=doc["status"],
            dead=bool(doc["dead"]),
            captures=captures,
            translocations=tuple(doc.get("translocations", ())),
            generated_at=doc["generated_at"],
            config=dict(doc["config"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceFormatError(f"{path}: bad detection export: {exc}") from None


# -- dataset discovery -----------------------------------------------------------


def write_run(run: AnnotatedTrace, out_dir, binary: bool = True) -> tuple[Path, Path]:
    """Write a trace plus its annotations using the run-id naming scheme."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = TRACE_BIN_SUFFIX if binary else TRACE_CSV_SUFFIX
    trace_path = out_dir / f"{run.run_id}{suffix}"
    ann_path = out_dir / f"{run.run_id}{ANNOTATION_SUFFIX}"
    if binary:
        write_trace_bin(run.trace, trace_path)
    else:
        write_trace_csv(run.trace, trace_path)
    write_annotations(run.run_id, run.trace.channel, run.annotations, ann_path)
    return trace_path, ann_path


def discover_runs(data_dir) -> list[AnnotatedTrace]:
    """Load every trace/annotation pair from a directory, sorted by run id."""
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise FileNotFoundError(f"data directory not found: {data_dir}")
    runs = []
    trace_paths = sorted(
        p for p in data_dir.iterdir()
        if p.suffix == TRACE_BIN_SUFFIX
        or (p.suffix == TRACE_CSV_SUFFIX and not p.name.endswith(ANNOTATION_SUFFIX))
    )
    for trace_path in trace_paths:
        ann_path = trace_path.with_name(trace_path.stem + ANNOTATION_SUFFIX)
        if not ann_path.exists():
            raise TraceFormatError(f"{trace_path}: missing annotations file {ann_path.name}")
        trace = read_trace(trace_path)
        run_id, channel, captures = read_annotations(ann_path)
        if run_id != trace.run_id:
            raise TraceFormatError(
                f"{ann_path}: run_id {run_id!r} does not match trace {trace.run_id!r}"
            )
        runs.append(AnnotatedTrace(trace=trace, annotations=tuple(captures)))
    if not runs:
        raise TraceFormatError(f"no trace files found in {data_dir}")
    return runs

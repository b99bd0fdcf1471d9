"""Versioned binary container for model weights.

Byte layout (all integers little-endian; documented in docs/formats.md):

    magic            4 bytes  b"CNWT"
    format_version   u32      currently 1
    header_len       u64
    header           UTF-8 JSON {"architecture": <descriptor>, "seed": int}
    n_arrays         u32
    per array:
        name_len     u32
        name         UTF-8
        ndim         u32
        dims         u64 * ndim
        values       f32 * prod(dims)

Round trips are bit-exact on the float32 parameter values.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CNWT"
FORMAT_VERSION = 1


class WeightsFormatError(ValueError):
    pass


def save_weights(model, path) -> None:
    desc = model.descriptor()
    header = json.dumps({"architecture": desc, "seed": desc.get("seed", 0)}).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        f.write(struct.pack("<I", len(model.params)))
        for name, arr in model.params.items():
            encoded = name.encode()
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _read_exact(f, n: int) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise WeightsFormatError("corrupt weights: unexpected end of file")
    return buf


def _build_model(desc: dict):
    from .model import ARCH_CAPTURENET_DEEP, CaptureNetDeep

    arch = desc.get("architecture")
    if arch == ARCH_CAPTURENET_DEEP:
        return CaptureNetDeep.from_descriptor(desc)
    if arch == "histogram-logistic":
        from ..baseline import HistogramLogistic

        return HistogramLogistic.from_descriptor(desc)
    raise WeightsFormatError(f"unknown architecture {arch!r}")


def load_weights(path):
    """Reconstruct a model from a weights file.

    Raises :class:`WeightsFormatError` on bad magic, unsupported version,
    truncation, or any mismatch between the stored arrays and the
    architecture descriptor.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"weights file not found: {path}")
    with open(path, "rb") as f:
        if _read_exact(f, 4) != MAGIC:
            raise WeightsFormatError("corrupt weights: not a weights file")
        (version,) = struct.unpack("<I", _read_exact(f, 4))
        if version != FORMAT_VERSION:
            raise WeightsFormatError(f"unsupported version {version}")
        (header_len,) = struct.unpack("<Q", _read_exact(f, 8))
        try:
            header = json.loads(_read_exact(f, header_len).decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise WeightsFormatError(f"corrupt weights: bad header ({exc})") from exc
        desc = header.get("architecture")
        if not isinstance(desc, dict):
            raise WeightsFormatError("corrupt weights: missing architecture descriptor")
        model = _build_model(desc)

        (n_arrays,) = struct.unpack("<I", _read_exact(f, 4))
        if n_arrays != len(model.params):
            raise WeightsFormatError(
                f"corrupt weights: {n_arrays} arrays stored, architecture "
                f"defines {len(model.params)}"
            )
        loaded: dict[str, np.ndarray] = {}
        for _ in range(n_arrays):
            (name_len,) = struct.unpack("<I", _read_exact(f, 4))
            name = _read_exact(f, name_len).decode()
            (ndim,) = struct.unpack("<I", _read_exact(f, 4))
            shape = struct.unpack(f"<{ndim}Q", _read_exact(f, 8 * ndim))
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(_read_exact(f, 4 * count), dtype="<f4")
            if name not in model.params:
                raise WeightsFormatError(f"corrupt weights: unknown array {name!r}")
            if tuple(model.params[name].shape) != tuple(shape):
                raise WeightsFormatError(
                    f"shape mismatch for {name!r}: file has {tuple(shape)}, "
                    f"descriptor implies {tuple(model.params[name].shape)}"
                )
            loaded[name] = data.reshape(shape).copy()
        if f.read(1):
            raise WeightsFormatError("corrupt weights: trailing bytes")
    model.set_params(loaded)
    return model

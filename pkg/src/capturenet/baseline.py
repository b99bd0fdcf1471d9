"""Histogram-feature logistic baseline.

Current-level histograms discard temporal order but keep the level
statistics that separate capture (~20 pA) from open pore (~180 pA), making
this a useful floor for the CNN to beat. The classifier is a single linear
layer plus sigmoid trained with the same BCE/AdamW machinery as the CNN and
pluggable into the identical postprocessing and evaluation paths.
"""

from __future__ import annotations

import numpy as np

from .nn import layers as L

ARCH_HISTOGRAM_LOGISTIC = "histogram-logistic"
DEFAULT_BIN_COUNT = 50
DEFAULT_RANGE_PA = (0.0, 250.0)
N_SUMMARY_STATS = 4


def featurize(
    values_pa: np.ndarray,
    bin_count: int = DEFAULT_BIN_COUNT,
    range_pa: tuple[float, float] = DEFAULT_RANGE_PA,
) -> np.ndarray:
    """Histogram features for one window or a batch of windows (pA input).

    Values are clipped into ``range_pa``, binned uniformly (counts normalized
    to sum to 1), and mean/std/min/max in range-normalized units are appended.
    Feature length is ``bin_count + 4``. Permutation-invariant by
    construction.
    """
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    lo, hi = range_pa
    if hi <= lo:
        raise ValueError("invalid histogram range")
    x = np.atleast_2d(np.asarray(values_pa, dtype=np.float64))
    if x.shape[1] == 0:
        raise ValueError("empty window")
    n, length = x.shape
    clipped = np.clip(x, lo, hi)
    width = (hi - lo) / bin_count
    idx = np.minimum(((clipped - lo) / width).astype(np.int64), bin_count - 1)
    flat = idx + np.arange(n)[:, None] * bin_count
    counts = np.bincount(flat.ravel(), minlength=n * bin_count).reshape(n, bin_count)
    hist = counts / length
    norm = clipped / hi
    stats = np.stack(
        [norm.mean(axis=1), norm.std(axis=1), norm.min(axis=1), norm.max(axis=1)],
        axis=1,
    )
    feats = np.concatenate([hist, stats], axis=1)
    return feats[0] if np.asarray(values_pa).ndim == 1 else feats


class HistogramLogistic:
    """Logistic classifier over histogram features.

    Accepts the same normalized window batches as the CNN; windows are
    rescaled back to pA internally before featurization so both models share
    one data path.
    """

    architecture = ARCH_HISTOGRAM_LOGISTIC

    def __init__(
        self,
        bin_count: int = DEFAULT_BIN_COUNT,
        range_pa: tuple[float, float] = DEFAULT_RANGE_PA,
        scale_pa: float = 200.0,
        seed: int = 0,
        dtype=np.float32,
    ):
        self.bin_count = int(bin_count)
        self.range_pa = (float(range_pa[0]), float(range_pa[1]))
        self.scale_pa = float(scale_pa)
        self.seed = int(seed)
        self.dtype = np.dtype(dtype).type
        dim = self.bin_count + N_SUMMARY_STATS
        # zero init: sigmoid(0) = 0.5 and logistic loss is convex, so there
        # is no symmetry to break
        self.params: dict[str, np.ndarray] = {
            "fc_w": np.zeros((dim, 1), dtype=self.dtype),
            "fc_b": np.zeros(1, dtype=self.dtype),
        }

    def descriptor(self) -> dict:
        return {
            "architecture": self.architecture,
            "bin_count": self.bin_count,
            "range_pa": list(self.range_pa),
            "scale_pa": self.scale_pa,
            "seed": self.seed,
        }

    @classmethod
    def from_descriptor(cls, desc: dict) -> "HistogramLogistic":
        return cls(
            bin_count=int(desc["bin_count"]),
            range_pa=tuple(desc.get("range_pa", DEFAULT_RANGE_PA)),
            scale_pa=float(desc.get("scale_pa", 200.0)),
            seed=int(desc.get("seed", 0)),
        )

    def _features(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim != 2:
            raise ValueError(f"expected batch of windows, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite input")
        feats = featurize(x * self.scale_pa, self.bin_count, self.range_pa)
        return feats.astype(self.dtype)

    def forward(self, x: np.ndarray, training: bool = False, rng=None) -> np.ndarray:
        logits, _ = L.linear_forward(self._features(x), self.params["fc_w"],
                                     self.params["fc_b"])
        return L.sigmoid(logits[:, 0])

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)

    def training_loss(self, x, y, rng=None) -> float:
        return L.bce_loss(self.forward(x), np.asarray(y, dtype=self.dtype))

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray, rng=None):
        feats = self._features(x)
        y = np.asarray(y, dtype=self.dtype)
        logits, cache = L.linear_forward(feats, self.params["fc_w"], self.params["fc_b"])
        probs = L.sigmoid(logits[:, 0])
        loss = L.bce_loss(probs, y)
        dlogits = L.bce_sigmoid_grad(probs, y).astype(self.dtype)[:, None]
        _, dw, db = L.linear_backward(dlogits, cache)
        return loss, {"fc_w": dw, "fc_b": db}

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for k, v in params.items():
            if k not in self.params:
                raise KeyError(f"unknown parameter {k!r}")
            if self.params[k].shape != v.shape:
                raise ValueError(
                    f"shape mismatch for {k!r}: {self.params[k].shape} vs {v.shape}"
                )
            self.params[k] = np.asarray(v, dtype=self.dtype)


def init_baseline(bin_count: int = DEFAULT_BIN_COUNT, scale_pa: float = 200.0,
                  seed: int = 0) -> HistogramLogistic:
    return HistogramLogistic(bin_count=bin_count, scale_pa=scale_pa, seed=seed)

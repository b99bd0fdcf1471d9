"""The capture-window classifier network.

Topology (window length L must divide by the pooling product 80):

    conv 1->16 k7 pad3, relu, maxpool4        L    -> L/4
    conv 16->32 k5 pad2, relu, maxpool4       L/4  -> L/16
    channel dropout (conv rate)
    conv 32->64 k3 pad1, relu, maxpool5       L/16 -> L/80
    channel dropout (conv rate)
    conv 64->64 k3 pad1, relu
    global average pool                       -> 64 features
    fc 64->32, relu, dropout (head rate)
    fc 32->1, sigmoid                         -> capture probability

The head carries the configured dropout rate; convolutional channel dropout
runs at half that rate, which keeps training stable at the aggressive head
rates the tuned operating point uses (~0.74).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import layers as L

ARCH_CAPTURENET_DEEP = "capturenet-deep"
POOL_SIZES = (4, 4, 5)
POOLING_PRODUCT = 80
CONV_SPECS = (
    # (name, in_channels, out_channels, kernel, pad)
    ("conv1", 1, 16, 7, 3),
    ("conv2", 16, 32, 5, 2),
    ("conv3", 32, 64, 3, 1),
    ("conv4", 64, 64, 3, 1),
)
FC1_IN, FC1_OUT, FC2_OUT = 64, 32, 1
PREDICT_BATCH = 256


def _kaiming_uniform(rng: np.random.Generator, shape, fan_in: int, dtype):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class CaptureNetDeep:
    """Deep 1D CNN window classifier with explicit numpy backprop.

    Parameters live in an ordered dict of arrays; training mutates a single
    owned copy (single writer), while inference may share the instance
    read-only across workers.
    """

    architecture = ARCH_CAPTURENET_DEEP

    def __init__(
        self,
        window_size: int,
        dropout: float = 0.739,
        seed: int = 0,
        conv_dropout: Optional[float] = None,
        dtype=np.float32,
    ):
        if window_size < 100:
            raise ValueError("window_size must be >= 100")
        if window_size % POOLING_PRODUCT != 0:
            lo = (window_size // POOLING_PRODUCT) * POOLING_PRODUCT
            raise ValueError(
                f"window_size {window_size} not divisible by pooling product "
                f"{POOLING_PRODUCT}; nearest valid sizes: {lo} and {lo + POOLING_PRODUCT}"
            )
        if not 0.0 <= dropout <= 0.8:
            raise ValueError("dropout must be in [0, 0.8]")
        self.window_size = window_size
        self.dropout = float(dropout)
        self.conv_dropout = float(dropout / 2.0 if conv_dropout is None else conv_dropout)
        self.seed = int(seed)
        self.dtype = np.dtype(dtype).type

        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        for name, cin, cout, k, _pad in CONV_SPECS:
            self.params[f"{name}_w"] = _kaiming_uniform(rng, (cout, cin, k), cin * k, self.dtype)
            self.params[f"{name}_b"] = np.zeros(cout, dtype=self.dtype)
        self.params["fc1_w"] = _kaiming_uniform(rng, (FC1_IN, FC1_OUT), FC1_IN, self.dtype)
        self.params["fc1_b"] = np.zeros(FC1_OUT, dtype=self.dtype)
        self.params["fc2_w"] = _kaiming_uniform(rng, (FC1_OUT, FC2_OUT), FC1_OUT, self.dtype)
        self.params["fc2_b"] = np.zeros(FC2_OUT, dtype=self.dtype)

    # -- architecture metadata -------------------------------------------------

    def descriptor(self) -> dict:
        return {
            "architecture": self.architecture,
            "window_size": self.window_size,
            "dropout": self.dropout,
            "conv_dropout": self.conv_dropout,
            "seed": self.seed,
        }

    @classmethod
    def from_descriptor(cls, desc: dict) -> "CaptureNetDeep":
        return cls(
            window_size=int(desc["window_size"]),
            dropout=float(desc["dropout"]),
            seed=int(desc.get("seed", 0)),
            conv_dropout=float(desc["conv_dropout"]) if "conv_dropout" in desc else None,
        )

    def time_steps_after_convs(self) -> int:
        return self.window_size // POOLING_PRODUCT

    # -- forward / backward ----------------------------------------------------

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.window_size:
            raise ValueError(
                f"expected batch of shape (N, {self.window_size}), got {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite input")
        return x

    def _forward(self, x: np.ndarray, training: bool, rng):
        p = self.params
        caches = {}
        h = x[:, None, :]
        for i, (name, _cin, _cout, _k, pad) in enumerate(CONV_SPECS):
            h, caches[name] = L.conv1d_forward(h, p[f"{name}_w"], p[f"{name}_b"], pad)
            h, caches[f"{name}_relu"] = L.relu_forward(h)
            if i < len(POOL_SIZES):
                h, caches[f"pool{i + 1}"] = L.maxpool1d_forward(h, POOL_SIZES[i])
            if i in (1, 2):  # after pools 2 and 3
                h, caches[f"chdrop{i}"] = L.channel_dropout_forward(
                    h, self.conv_dropout, rng, training
                )
        h, caches["gap"] = L.global_avg_pool_forward(h)
        h, caches["fc1"] = L.linear_forward(h, p["fc1_w"], p["fc1_b"])
        h, caches["fc1_relu"] = L.relu_forward(h)
        h, caches["head_drop"] = L.dropout_forward(h, self.dropout, rng, training)
        logits, caches["fc2"] = L.linear_forward(h, p["fc2_w"], p["fc2_b"])
        probs = L.sigmoid(logits[:, 0])
        return probs, caches

    def forward(self, x: np.ndarray, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
        """Per-window capture probabilities in (0, 1).

        Eval mode is deterministic; train mode applies inverted dropout
        driven by the supplied generator.
        """
        x = self._check_input(x)
        if training and rng is None and (self.dropout > 0 or self.conv_dropout > 0):
            raise ValueError("training-mode forward with dropout requires an rng")
        probs, _ = self._forward(x, training, rng)
        return probs

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Eval-mode probabilities, chunked to bound im2col memory."""
        x = self._check_input(x)
        if x.shape[0] <= PREDICT_BATCH:
            return self._forward(x, False, None)[0]
        outs = [
            self._forward(x[i : i + PREDICT_BATCH], False, None)[0]
            for i in range(0, x.shape[0], PREDICT_BATCH)
        ]
        return np.concatenate(outs)

    def training_loss(self, x: np.ndarray, y: np.ndarray,
                      rng: Optional[np.random.Generator]) -> float:
        x = self._check_input(x)
        probs, _ = self._forward(x, True, rng)
        return L.bce_loss(probs, np.asarray(y, dtype=self.dtype))

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray,
                       rng: Optional[np.random.Generator]):
        """Mean BCE and its analytic gradient for every parameter.

        Train-mode forward: the dropout masks are drawn once from ``rng`` and
        reused by the backward pass.
        """
        x = self._check_input(x)
        y = np.asarray(y, dtype=self.dtype)
        probs, caches = self._forward(x, True, rng)
        loss = L.bce_loss(probs, y)

        grads: dict[str, np.ndarray] = {}
        dlogits = L.bce_sigmoid_grad(probs, y).astype(self.dtype)[:, None]
        dh, grads["fc2_w"], grads["fc2_b"] = L.linear_backward(dlogits, caches["fc2"])
        dh = L.dropout_backward(dh, caches["head_drop"])
        dh = L.relu_backward(dh, caches["fc1_relu"])
        dh, grads["fc1_w"], grads["fc1_b"] = L.linear_backward(dh, caches["fc1"])
        dh = L.global_avg_pool_backward(dh, caches["gap"])
        for i in range(len(CONV_SPECS) - 1, -1, -1):
            name = CONV_SPECS[i][0]
            if i in (1, 2):
                dh = L.dropout_backward(dh, caches[f"chdrop{i}"])
            if i < len(POOL_SIZES):
                dh = L.maxpool1d_backward(dh, caches[f"pool{i + 1}"])
            dh = L.relu_backward(dh, caches[f"{name}_relu"])
            dh, grads[f"{name}_w"], grads[f"{name}_b"] = L.conv1d_backward(
                dh, caches[name]
            )
        return loss, grads

    # -- parameter management --------------------------------------------------

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


def init_model(window_size: int, dropout: float, seed: int) -> CaptureNetDeep:
    """Deterministically initialized classifier for the given window size."""
    return CaptureNetDeep(window_size=window_size, dropout=dropout, seed=seed)

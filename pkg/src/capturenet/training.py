"""Mini-batch training loop with early stopping on validation loss."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .datasets import BalancedDataset
from .nn.layers import bce_loss
from .nn.optim import AdamW


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    lr: float = 1.83e-4
    weight_decay: float = 3.32e-3
    max_epochs: int = 500
    patience: int = 50

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs, and patience must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")


class TrainingDivergedError(RuntimeError):
    """Raised when the loss goes non-finite; carries the last finite epoch."""

    def __init__(self, message: str, last_finite_epoch: int, records: list[dict]):
        super().__init__(message)
        self.last_finite_epoch = last_finite_epoch
        self.records = records


@dataclass
class TrainResult:
    model: object
    best_epoch: int
    best_val_loss: float
    stopped_epoch: int
    records: list[dict] = field(repr=False)


def train_model(
    model,
    train_ds: BalancedDataset,
    val_ds: BalancedDataset,
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
) -> TrainResult:
    """Train until validation loss stalls.

    Each epoch runs seeded shuffled mini-batches, then computes validation
    BCE in eval mode. Training stops once ``patience`` epochs pass without a
    strict improvement, or at ``max_epochs``; the returned model carries the
    parameters of the best-validation epoch. Deterministic given
    (seed, datasets, config).
    """
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise ValueError("datasets must be nonempty")
    rng = np.random.default_rng(seed)
    opt = AdamW(model.params, lr=config.lr, weight_decay=config.weight_decay)

    records: list[dict] = []
    best_val = np.inf
    best_epoch = 0
    best_params = model.copy_params()
    n = len(train_ds)

    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(n)
        batch_losses = []
        for i in range(0, n, config.batch_size):
            sel = perm[i : i + config.batch_size]
            loss, grads = model.loss_and_grads(train_ds.x[sel], train_ds.y[sel], rng)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"training loss diverged at epoch {epoch}",
                    last_finite_epoch=epoch - 1,
                    records=records,
                )
            opt.step(model.params, grads)
            batch_losses.append(loss)
        train_loss = float(np.mean(batch_losses))
        val_loss = bce_loss(model.predict_proba(val_ds.x), val_ds.y)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(
                f"validation loss diverged at epoch {epoch}",
                last_finite_epoch=epoch - 1,
                records=records,
            )
        records.append(
            {
                "epoch": epoch,
                "train_loss": train_loss,
                "val_loss": val_loss,
                "timestamp": datetime.now(timezone.utc).isoformat(),
            }
        )
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = model.copy_params()
        if epoch - best_epoch >= config.patience:
            break

    model.set_params(best_params)
    return TrainResult(
        model=model,
        best_epoch=best_epoch,
        best_val_loss=float(best_val),
        stopped_epoch=epoch,
        records=records,
    )


def write_training_log(records: list[dict], path) -> None:
    """One JSON record per line, one line per epoch."""
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(rec) + "\n")

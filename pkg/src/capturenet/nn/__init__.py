from .layers import bce_loss, sigmoid
from .model import ARCH_CAPTURENET_DEEP, POOLING_PRODUCT, CaptureNetDeep, init_model
from .optim import AdamW, adamw_step
from .weights import WeightsFormatError, load_weights, save_weights

__all__ = [
    "ARCH_CAPTURENET_DEEP",
    "POOLING_PRODUCT",
    "AdamW",
    "CaptureNetDeep",
    "WeightsFormatError",
    "adamw_step",
    "bce_loss",
    "init_model",
    "load_weights",
    "save_weights",
    "sigmoid",
]

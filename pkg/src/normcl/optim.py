"""Adam with bias correction and the warmup/inverse-sqrt learning rate."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, TrainingDiverged
from .tensor import Tensor

__all__ = ["AdamState", "adam_step", "lr_schedule"]


class AdamState:
    """First/second moments per named parameter plus a step counter."""

    def __init__(self, params: dict[str, Tensor], beta1: float = 0.9,
                 beta2: float = 0.98, eps: float = 1e-9):
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ConfigError(f"betas must be in [0, 1): {beta1}, {beta2}")
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in params.items()}


def adam_step(params: dict[str, Tensor], state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place.

    Parameters with no gradient buffer are treated as zero-gradient
    (moments still decay).  NaN/Inf in any gradient aborts.
    """
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if not np.all(np.isfinite(g)):
            raise TrainingDiverged(f"non-finite gradient in parameter '{name}'", step=t)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p.data -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def lr_schedule(t: int, warmup: int, peak: float) -> float:
    """Linear warmup to ``peak`` at step ``warmup``, then inverse-sqrt decay."""
    if t < 1:
        raise ConfigError(f"schedule step must be >= 1, got {t}")
    if warmup < 1:
        raise ConfigError(f"warmup must be >= 1, got {warmup}")
    return peak * min(t / warmup, math.sqrt(warmup / t))

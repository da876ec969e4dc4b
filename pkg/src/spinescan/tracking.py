"""Scalar Kalman filter on the lateral spinous-process coordinate."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError
from .imaging import CENTER_X


@dataclass(frozen=True)
class KalmanState:
    x_hat: float = CENTER_X
    P: float = 500.0
    Q: float = 0.5
    R: float = 500.0
    initialized: bool = False
    gain: float = 0.0  # gain of the most recent update, 0 on gap frames

    def __post_init__(self):
        if self.Q <= 0 or self.R <= 0:
            raise DomainError("Q and R must be positive")


def kf_step(state: KalmanState, measurement: float | None):
    """One predict/update cycle with a constant-position model.

    The variance always grows by Q; the update only happens when a
    measurement is present. The first measurement initialises the estimate
    outright (gain 1) and leaves P at its predicted value.
    """
    P = state.P + state.Q
    if not state.initialized and measurement is not None:
        new = replace(state, x_hat=float(measurement), P=P, initialized=True, gain=1.0)
        return new, new.x_hat
    if measurement is None:
        new = replace(state, P=P, gain=0.0)
        return new, new.x_hat
    K = P / (P + state.R)
    x_hat = state.x_hat + K * (measurement - state.x_hat)
    new = replace(state, x_hat=x_hat, P=(1.0 - K) * P, gain=K)
    return new, x_hat


def steady_state_variance(Q: float, R: float) -> float:
    """Posterior variance at the fixed point of the update recursion."""
    return (-Q + math.sqrt(Q * Q + 4.0 * Q * R)) / 2.0


def steady_state_gain(Q: float, R: float) -> float:
    P = steady_state_variance(Q, R)
    return (P + Q) / (P + Q + R)

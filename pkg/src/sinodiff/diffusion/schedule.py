"""Forward-noising schedule: beta variances and their running products."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_T = 1000
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


@dataclass(frozen=True)
class DiffusionSchedule:
    """Arrays are indexed directly by timestep t in 0..T.

    Index 0 is the "clean" convention slot: beta[0] = 0, alpha[0] = 1,
    alpha_bar[0] = 1. Real steps live at 1..T.
    """

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        for name in ("beta", "alpha", "alpha_bar"):
            arr = getattr(self, name)
            if arr.shape != (self.T + 1,):
                raise ValueError(f"{name} must have shape (T+1,), got {arr.shape}")
        if not (self.beta[1:] > 0).all() or not (self.beta[1:] < 1).all():
            raise ValueError("beta_t must lie in (0, 1) for t = 1..T")
        if self.alpha_bar[0] != 1.0:
            raise ValueError("alpha_bar[0] must be 1")
        if not (np.diff(self.alpha_bar) < 0).all():
            raise ValueError("alpha_bar must be strictly decreasing")


def linear_schedule(
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> DiffusionSchedule:
    """Betas linearly interpolated from beta_start to beta_end inclusive."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError("require 0 < beta_start <= beta_end < 1")
    beta = np.zeros(T + 1, dtype=np.float64)
    beta[1:] = np.linspace(beta_start, beta_end, T)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return DiffusionSchedule(T=T, beta=beta, alpha=alpha, alpha_bar=alpha_bar)


@dataclass(frozen=True)
class NoisySample:
    z_t: np.ndarray
    t: int
    eps: np.ndarray


def q_sample(x0: np.ndarray, t: int, noise: np.ndarray, sched: DiffusionSchedule) -> NoisySample:
    """z_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * noise.

    t = 0 is the identity (alpha_bar[0] = 1).
    """
    x0 = np.asarray(x0)
    noise = np.asarray(noise)
    if not (0 <= t <= sched.T):
        raise ValueError(f"t must be in [0, {sched.T}], got {t}")
    if x0.shape != noise.shape:
        raise ValueError(f"noise shape {noise.shape} does not match x0 shape {x0.shape}")
    ab = float(sched.alpha_bar[t])
    z = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise
    return NoisySample(z_t=z, t=t, eps=noise)

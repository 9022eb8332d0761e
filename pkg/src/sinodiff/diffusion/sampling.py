"""Deterministic strided-subsequence sampler (eta = 0) for trained denoisers."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
import torch

from .model import ModelParams
from .schedule import DiffusionSchedule

DEFAULT_STEPS = 50


def timestep_subsequence(T: int, n_steps: int) -> np.ndarray:
    """Uniformly strided decreasing timesteps from T down to 1, inclusive."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if n_steps > T:
        raise ValueError(f"n_steps ({n_steps}) must not exceed T ({T})")
    return np.round(np.linspace(T, 1, n_steps)).astype(np.int64)


def sample(
    params: ModelParams,
    cond_la: np.ndarray,
    cond_mask: np.ndarray,
    sched: Optional[DiffusionSchedule] = None,
    n_steps: int = DEFAULT_STEPS,
    seed: int = 0,
) -> np.ndarray:
    """Denoise seeded Gaussian noise into a normalized sinogram prediction.

    Each step estimates x0 from the current noise prediction, overwrites the
    observed bins of that estimate with their known values (``cond_la`` is the
    normalized measurement wherever ``cond_mask`` is 1), and re-noises the
    result to the next (lower) timestep with no stochastic term. Pinning the
    observed bins to the measurements at every step keeps the generated wedge
    consistent with the data instead of merely plausible. The trajectory — and
    the output — is a pure function of (params, condition, n_steps, seed).
    """
    la = np.asarray(cond_la, dtype=np.float32)
    mask = np.asarray(cond_mask, dtype=np.float32)
    if la.shape != mask.shape or la.ndim != 2:
        raise ValueError("cond_la and cond_mask must be 2-D arrays of one shape")
    if sched is None:
        sched = params.schedule()
    if sched.T != params.T:
        raise ValueError(f"schedule T={sched.T} does not match model T={params.T}")
    taus = timestep_subsequence(sched.T, n_steps)

    gen = torch.Generator().manual_seed(seed)
    z = torch.randn((1, 1) + la.shape, generator=gen)
    cond = torch.from_numpy(np.stack([la, mask])[None])
    la_t = cond[:, :1]
    mask_t = cond[:, 1:]

    params.net.eval()
    with torch.no_grad():
        for i, t in enumerate(taus):
            eps = params.net(z, torch.tensor([int(t)], dtype=torch.long), cond)
            ab_t = float(sched.alpha_bar[t])
            x0 = (z - math.sqrt(1.0 - ab_t) * eps) / math.sqrt(ab_t)
            x0 = mask_t * la_t + (1.0 - mask_t) * x0
            t_next = int(taus[i + 1]) if i + 1 < len(taus) else 0
            ab_next = float(sched.alpha_bar[t_next])
            z = math.sqrt(ab_next) * x0 + math.sqrt(1.0 - ab_next) * eps
    return z[0, 0].numpy()

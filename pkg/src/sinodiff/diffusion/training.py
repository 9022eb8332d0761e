"""From-scratch training of the conditional denoiser on (GT, LA, mask) triples."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from ..grid import Sinogram
from ..masking import AngularMask
from .model import ConditionalDenoiser, ModelParams
from .schedule import DiffusionSchedule, linear_schedule
from .transform import conditioning, normalize

Triple = Tuple[Sinogram, Sinogram, AngularMask]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 8
    learning_rate: float = 2e-4
    seed: int = 0
    T: int = 1000
    log_every: int = 1
    base_width: int = 32
    channel_mults: Tuple[int, int, int] = (1, 2, 4)
    # Loss weight on the missing rows relative to observed ones. Inference
    # keeps only the missing rows of a prediction (observed bins are merged
    # back from the measurement), so the budget of gradient steps is spent
    # where it counts. 1.0 recovers a plain unweighted loss.
    wedge_loss_weight: float = 8.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")
        if self.wedge_loss_weight < 1:
            raise ValueError("wedge_loss_weight must be >= 1")


def _check_linear(sched: DiffusionSchedule):
    ref = np.linspace(sched.beta[1], sched.beta[sched.T], sched.T)
    if not np.allclose(sched.beta[1:], ref, rtol=0, atol=1e-12):
        raise ValueError("only linear beta schedules can be bundled into a checkpoint")


def train(
    dataset: Sequence[Triple],
    cfg: TrainConfig,
    sched: Optional[DiffusionSchedule] = None,
    *,
    norm_scale: float,
) -> Tuple[ModelParams, List[Tuple[int, float]]]:
    """Minimize the noise-prediction error E||eps - eps_hat(z_t, t, cond)||^2
    with Adam, weighting missing rows by cfg.wedge_loss_weight (normalized so
    the loss scale matches the unweighted objective).

    Returns the trained parameter bundle and the loss log as (step, loss)
    pairs, one every cfg.log_every steps starting at step 0. Fully seeded:
    weight init, batch order, timestep draws, and noise draws all derive
    from cfg.seed.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if norm_scale <= 0:
        raise ValueError("norm_scale must be positive")
    geometry = dataset[0][0].geometry
    for gt, la, mask in dataset:
        if gt.geometry != geometry or la.geometry != geometry:
            raise ValueError("all sinograms in the dataset must share one geometry")
        if mask.n_angles != geometry.n_angles:
            raise ValueError("mask angle count does not match geometry")
    if sched is None:
        sched = linear_schedule(cfg.T)
    if sched.T != cfg.T:
        raise ValueError(f"schedule T={sched.T} does not match config T={cfg.T}")
    _check_linear(sched)

    x0 = torch.from_numpy(
        np.stack([normalize(gt, norm_scale) for gt, _, _ in dataset])[:, None].astype(np.float32)
    )
    cond = torch.from_numpy(
        np.stack([conditioning(la, mask, norm_scale) for _, la, mask in dataset])
    )
    n = x0.shape[0]
    # per-sample row weights: 1 on observed rows, wedge_loss_weight on missing
    row_w = torch.from_numpy(
        np.stack(
            [
                np.where(mask.observed_rows() > 0, 1.0, cfg.wedge_loss_weight)
                for _, _, mask in dataset
            ]
        ).astype(np.float32)
    )[:, None, :, None]

    torch.manual_seed(cfg.seed)
    net = ConditionalDenoiser(cfg.base_width, cfg.channel_mults)
    gen = torch.Generator().manual_seed(cfg.seed)
    shuffle_rng = np.random.default_rng(cfg.seed)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    alpha_bar = torch.from_numpy(sched.alpha_bar).to(torch.float32)

    log: List[Tuple[int, float]] = []
    step = 0
    net.train()
    for _ in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = torch.from_numpy(order[lo : lo + cfg.batch_size].copy())
            b = idx.shape[0]
            t = torch.randint(1, cfg.T + 1, (b,), generator=gen)
            eps = torch.randn((b, 1) + x0.shape[2:], generator=gen)
            ab = alpha_bar[t].view(b, 1, 1, 1)
            z = ab.sqrt() * x0[idx] + (1.0 - ab).sqrt() * eps
            pred = net(z, t, cond[idx])
            w = row_w[idx]
            loss = (w * (pred - eps).square()).sum() / (w.sum() * pred.shape[-1])
            opt.zero_grad()
            loss.backward()
            opt.step()
            if step % cfg.log_every == 0:
                log.append((step, float(loss.detach())))
            step += 1

    params = ModelParams(
        net=net,
        geometry=geometry,
        T=sched.T,
        beta_start=float(sched.beta[1]),
        beta_end=float(sched.beta[sched.T]),
        norm_scale=float(norm_scale),
    )
    return params, log

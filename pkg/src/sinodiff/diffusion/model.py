"""Time-conditioned UNet noise predictor with a zero-initialized conditioning
branch, plus the trained-parameter bundle and a functional prediction entry point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..grid import ProjectionGeometry
from .schedule import DiffusionSchedule, linear_schedule

LEVELS = 3
PAD_MULTIPLE = 2 ** (LEVELS - 1)


def _groups(channels: int) -> int:
    return 8 if channels % 8 == 0 else 1


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Classic transformer-style embedding of integer timesteps, shape (B, dim)."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=torch.float64) / max(half - 1, 1)
    ).to(t.device)
    args = t.to(torch.float64)[:, None] * freqs[None, :]
    emb = torch.cat([torch.cos(args), torch.sin(args)], dim=-1)
    return emb


class ResBlock(nn.Module):
    """GroupNorm -> SiLU -> conv, twice, with the time embedding added between
    the two convs and a learned 1x1 skip when channel counts change.
    """

    def __init__(self, in_ch: int, out_ch: int, time_dim: int):
        super().__init__()
        self.norm1 = nn.GroupNorm(_groups(in_ch), in_ch)
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.time_proj = nn.Linear(time_dim, out_ch)
        self.norm2 = nn.GroupNorm(_groups(out_ch), out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()

    def forward(self, x: torch.Tensor, temb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(F.silu(self.norm1(x)))
        h = h + self.time_proj(temb)[:, :, None, None]
        h = self.conv2(F.silu(self.norm2(h)))
        return h + self.skip(x)


def _zero_(module: nn.Conv2d) -> nn.Conv2d:
    nn.init.zeros_(module.weight)
    nn.init.zeros_(module.bias)
    return module


class ConditionalDenoiser(nn.Module):
    """Predicts the noise in z_t given the timestep and, optionally, a
    2-channel condition (normalized sinogram estimate + bin mask).

    Three resolution levels. The condition enters twice: concatenated onto the
    network input (stem weights for those channels start at zero), and through
    a branch mirroring the encoder, injected via zero-initialized 1x1
    convolutions after each encoder block. Both paths are exactly zero at
    initialization, so a fresh model ignores the condition entirely; the input
    path gives the condition a direct, shallow route to every layer once
    training moves the stem weights.
    """

    def __init__(self, base_width: int = 32, channel_mults: Tuple[int, int, int] = (1, 2, 4)):
        super().__init__()
        if len(channel_mults) != LEVELS:
            raise ValueError(f"channel_mults must have {LEVELS} entries")
        if base_width < 1:
            raise ValueError("base_width must be >= 1")
        self.base_width = base_width
        self.channel_mults = tuple(int(m) for m in channel_mults)
        c0, c1, c2 = (base_width * m for m in self.channel_mults)
        tdim = 4 * base_width
        self.time_dim = tdim
        self.time_mlp = nn.Sequential(nn.Linear(tdim, tdim), nn.SiLU(), nn.Linear(tdim, tdim))

        self.stem = nn.Conv2d(1 + 2, c0, 3, padding=1)
        with torch.no_grad():
            self.stem.weight[:, 1:].zero_()  # condition channels start silent
        self.enc0 = ResBlock(c0, c0, tdim)
        self.down0 = nn.Conv2d(c0, c0, 3, stride=2, padding=1)
        self.enc1 = ResBlock(c0, c1, tdim)
        self.down1 = nn.Conv2d(c1, c1, 3, stride=2, padding=1)
        self.enc2 = ResBlock(c1, c2, tdim)
        self.mid = ResBlock(c2, c2, tdim)

        self.up1 = nn.Conv2d(c2, c1, 3, padding=1)
        self.dec1 = ResBlock(c1 + c1, c1, tdim)
        self.up0 = nn.Conv2d(c1, c0, 3, padding=1)
        self.dec0 = ResBlock(c0 + c0, c0, tdim)
        self.out_norm = nn.GroupNorm(_groups(c0), c0)
        self.out_conv = _zero_(nn.Conv2d(c0, 1, 3, padding=1))

        self.cond_stem = nn.Conv2d(2, c0, 3, padding=1)
        self.cond_enc0 = ResBlock(c0, c0, tdim)
        self.cond_down0 = nn.Conv2d(c0, c0, 3, stride=2, padding=1)
        self.cond_enc1 = ResBlock(c0, c1, tdim)
        self.cond_down1 = nn.Conv2d(c1, c1, 3, stride=2, padding=1)
        self.cond_enc2 = ResBlock(c1, c2, tdim)
        self.fuse0 = _zero_(nn.Conv2d(c0, c0, 1))
        self.fuse1 = _zero_(nn.Conv2d(c1, c1, 1))
        self.fuse2 = _zero_(nn.Conv2d(c2, c2, 1))

    def forward(
        self, z: torch.Tensor, t: torch.Tensor, cond: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        if z.dim() != 4 or z.size(1) != 1:
            raise ValueError(f"z must be (B, 1, H, W), got {tuple(z.shape)}")
        if cond is not None:
            if cond.dim() != 4 or cond.size(1) != 2:
                raise ValueError(f"cond must be (B, 2, H, W), got {tuple(cond.shape)}")
            if cond.size(0) != z.size(0) or cond.shape[2:] != z.shape[2:]:
                raise ValueError(
                    f"cond shape {tuple(cond.shape)} does not match z {tuple(z.shape)}"
                )
        if t.dim() == 0:
            t = t.expand(z.size(0))
        if t.shape != (z.size(0),):
            raise ValueError(f"t must be scalar or (B,), got {tuple(t.shape)}")

        h, w = z.shape[2:]
        pad_h = (-h) % PAD_MULTIPLE
        pad_w = (-w) % PAD_MULTIPLE
        if pad_h or pad_w:
            z = F.pad(z, (0, pad_w, 0, pad_h))
            if cond is not None:
                cond = F.pad(cond, (0, pad_w, 0, pad_h))

        temb = self.time_mlp(sinusoidal_embedding(t, self.time_dim).to(z.dtype))

        if cond is not None:
            g0 = self.cond_enc0(self.cond_stem(cond), temb)
            g1 = self.cond_enc1(self.cond_down0(g0), temb)
            g2 = self.cond_enc2(self.cond_down1(g1), temb)

        stem_in = torch.cat(
            [z, cond if cond is not None else z.new_zeros((z.size(0), 2) + z.shape[2:])],
            dim=1,
        )
        h0 = self.enc0(self.stem(stem_in), temb)
        if cond is not None:
            h0 = h0 + self.fuse0(g0)
        h1 = self.enc1(self.down0(h0), temb)
        if cond is not None:
            h1 = h1 + self.fuse1(g1)
        h2 = self.enc2(self.down1(h1), temb)
        if cond is not None:
            h2 = h2 + self.fuse2(g2)

        m = self.mid(h2, temb)
        u1 = self.up1(F.interpolate(m, scale_factor=2, mode="nearest"))
        d1 = self.dec1(torch.cat([u1, h1], dim=1), temb)
        u0 = self.up0(F.interpolate(d1, scale_factor=2, mode="nearest"))
        d0 = self.dec0(torch.cat([u0, h0], dim=1), temb)
        out = self.out_conv(F.silu(self.out_norm(d0)))

        if pad_h or pad_w:
            out = out[:, :, :h, :w]
        return out


@dataclass
class ModelParams:
    """A trained denoiser plus everything needed to use it: geometry, the
    schedule it was trained under, and the input normalization scale.
    """

    net: ConditionalDenoiser
    geometry: ProjectionGeometry
    T: int
    beta_start: float
    beta_end: float
    norm_scale: float

    def schedule(self) -> DiffusionSchedule:
        return linear_schedule(self.T, self.beta_start, self.beta_end)


def predict_noise(
    params: ModelParams,
    z_t: np.ndarray,
    t: int,
    cond_la: Optional[np.ndarray] = None,
    cond_mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Run the denoiser once on a single sinogram-shaped array.

    cond_la and cond_mask must be given together (or both omitted for the
    bare unconditional backbone).
    """
    z = np.asarray(z_t, dtype=np.float32)
    if (cond_la is None) != (cond_mask is None):
        raise ValueError("cond_la and cond_mask must be supplied together")
    if not (0 <= t <= params.T):
        raise ValueError(f"t must be in [0, {params.T}], got {t}")
    cond_t = None
    if cond_la is not None:
        la = np.asarray(cond_la, dtype=np.float32)
        mask = np.asarray(cond_mask, dtype=np.float32)
        if la.shape != z.shape or mask.shape != z.shape:
            raise ValueError("condition arrays must match z_t's shape")
        cond_t = torch.from_numpy(np.stack([la, mask])[None])
    z_torch = torch.from_numpy(z[None, None])
    params.net.eval()
    with torch.no_grad():
        out = params.net(z_torch, torch.tensor([t], dtype=torch.long), cond_t)
    return out[0, 0].numpy()

"""Synthetic ellipse phantoms: deterministic, dataset-free activity maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Image

SUPPORT_RADIUS = 0.95  # phantoms live inside this fraction of the inscribed disk


@dataclass(frozen=True)
class EllipseSpec:
    """One additive ellipse in normalized coordinates ([-1, 1] maps to the
    grid extent; radius 1 equals half the image width).
    """

    center_x: float
    center_y: float
    a: float
    b: float
    rotation: float
    intensity: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("ellipse semi-axes must be strictly positive")


def _grid_coords(size: int):
    half = size / 2.0
    c = (size - 1) / 2.0
    coords = (np.arange(size) - c) / half
    return np.meshgrid(coords, coords)  # x (cols), y (rows)


def rasterize(e: EllipseSpec, size: int) -> Image:
    """Pixel-center rasterization: a pixel gets ``e.intensity`` if its center
    lies inside the rotated ellipse, else 0.
    """
    if size <= 0:
        raise ValueError("size must be positive")
    x, y = _grid_coords(size)
    dx = x - e.center_x
    dy = y - e.center_y
    cr, sr = np.cos(e.rotation), np.sin(e.rotation)
    u = dx * cr + dy * sr
    v = -dx * sr + dy * cr
    inside = (u / e.a) ** 2 + (v / e.b) ** 2 <= 1.0
    return Image(size, size, np.where(inside, e.intensity, 0.0).astype(np.float32))


def random_phantom(seed: int, size: int) -> Image:
    """Sum of 3-8 random ellipses, clipped to >= 0, supported inside the
    disk of radius ``SUPPORT_RADIUS``, peak normalized to 1.0.

    Pure function of (seed, size).
    """
    if size <= 0:
        raise ValueError("size must be positive")
    rng = np.random.default_rng(seed)
    n_ellipses = int(rng.integers(3, 9))
    acc = np.zeros((size, size), dtype=np.float64)
    x, y = _grid_coords(size)
    for _ in range(n_ellipses):
        a = float(rng.uniform(0.08, 0.45))
        b = float(rng.uniform(0.08, 0.45))
        max_r = SUPPORT_RADIUS - max(a, b)
        r = float(rng.uniform(0.0, max_r))
        phi = float(rng.uniform(0.0, 2.0 * np.pi))
        spec = EllipseSpec(
            center_x=r * np.cos(phi),
            center_y=r * np.sin(phi),
            a=a,
            b=b,
            rotation=float(rng.uniform(0.0, np.pi)),
            intensity=float(rng.uniform(0.2, 1.0)),
        )
        acc += rasterize(spec, size).data
    acc[x * x + y * y > SUPPORT_RADIUS**2] = 0.0
    acc = np.clip(acc, 0.0, None)
    peak = acc.max()
    if peak > 0:
        acc /= peak
    return Image(size, size, acc.astype(np.float32))

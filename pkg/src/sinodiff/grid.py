"""Core value types: square activity images, acquisition geometry, sinograms.

Arrays are stored as C-contiguous float32; heavy numerics upcast to float64
internally. Instances are treated as immutable values after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_f32(data, shape) -> np.ndarray:
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if arr.size != shape[0] * shape[1]:
        raise ValueError(f"expected {shape[0] * shape[1]} values, got {arr.size}")
    return arr.reshape(shape)


@dataclass(frozen=True)
class Image:
    """Square 2D activity map. ``data`` has shape (height, width), row-major."""

    width: int
    height: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.width != self.height:
            raise ValueError(f"images must be square, got {self.width}x{self.height}")
        object.__setattr__(self, "data", _as_f32(self.data, (self.height, self.width)))

    @property
    def size(self) -> int:
        return self.width


def new_image(width: int, height: int, fill: float = 0.0) -> Image:
    """Constant-valued square image."""
    if width != height:
        raise ValueError(f"images must be square, got {width}x{height}")
    if width <= 0:
        raise ValueError("image dimensions must be positive")
    return Image(width, height, np.full((height, width), fill, dtype=np.float32))


@dataclass(frozen=True)
class ProjectionGeometry:
    """Parallel-beam geometry: ``n_angles`` uniform angles over [0, pi) and
    ``n_bins`` radial bins of ``bin_spacing`` pixels, centered on the grid.

    Angle k has value k*pi/n_angles; radial bin b sits at offset
    (b - (n_bins-1)/2) * bin_spacing from the grid center.
    """

    n_angles: int
    n_bins: int
    image_size: int
    bin_spacing: float = 1.0

    def __post_init__(self):
        if self.n_angles <= 0 or self.n_bins <= 0 or self.image_size <= 0:
            raise ValueError("geometry counts must be positive")
        if self.n_bins < self.image_size:
            raise ValueError(
                f"n_bins ({self.n_bins}) must cover the image ({self.image_size})"
            )
        if self.bin_spacing <= 0:
            raise ValueError("bin_spacing must be positive")

    @property
    def angles(self) -> np.ndarray:
        """Projection angles in radians, shape (n_angles,), half-open [0, pi)."""
        return np.arange(self.n_angles, dtype=np.float64) * (np.pi / self.n_angles)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_angles, self.n_bins)


@dataclass(frozen=True)
class Sinogram:
    """Line-integral data on a geometry. ``data`` has shape (n_angles, n_bins)."""

    geometry: ProjectionGeometry
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "data", _as_f32(self.data, self.geometry.shape))
        if not np.all(np.isfinite(self.data)):
            raise ValueError("sinogram values must be finite")


def sinogram_total(s: Sinogram) -> float:
    """Sum of all bins (float64 accumulation)."""
    return float(np.sum(s.data, dtype=np.float64))

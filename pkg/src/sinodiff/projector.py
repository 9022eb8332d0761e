"""Parallel-beam forward projection and its exact adjoint.

The hot kernels live in the compiled extension ``sinodiff._projops`` when
it is available; ``sinodiff._projops_np`` is a pure-numpy fallback with
identical semantics. Selection happens at import time and can be forced
with ``SINODIFF_PROJECTOR=python`` or ``=compiled``.

Scheme: pixel-driven linear splat. Each pixel of value f at center (x, y)
deposits f*(1-w) and f*w into the two radial bins bracketing
x*cos(theta) + y*sin(theta). The deposit weights sum to one, so every
angular row of the forward projection carries the total image mass
(truncated only for pixels projecting outside the detector). The
backprojector gathers with the same weights, making the pair adjoint to
float64 rounding.
"""

from __future__ import annotations

import os

import numpy as np

from .grid import Image, ProjectionGeometry, Sinogram
from .masking import AngularMask
from . import _projops_np

try:
    from . import _projops  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on build environment
    _projops = None


def _select_backend():
    forced = os.environ.get("SINODIFF_PROJECTOR", "").strip().lower()
    if forced == "python":
        return _projops_np
    if forced == "compiled":
        if _projops is None:
            raise ImportError(
                "SINODIFF_PROJECTOR=compiled but the extension is not built"
            )
        return _projops
    return _projops if _projops is not None else _projops_np


_kernels = _select_backend()
BACKEND = _kernels.BACKEND

available_backends = {"python": _projops_np}
if _projops is not None:
    available_backends["compiled"] = _projops


class Projector:
    """Discrete Radon operator A (``forward``) and its adjoint (``backproject``)
    for one geometry. Immutable after construction; safe to share.
    """

    def __init__(self, geometry: ProjectionGeometry, kernels=None):
        self.geometry = geometry
        angles = geometry.angles
        self._cos = np.cos(angles)
        self._sin = np.sin(angles)
        self._kernels = kernels if kernels is not None else _kernels

    # float64 array entry points, used by MLEM to avoid float32 round trips
    def forward_array(self, image: np.ndarray) -> np.ndarray:
        if image.shape != (self.geometry.image_size, self.geometry.image_size):
            raise ValueError(
                f"image shape {image.shape} does not match geometry size "
                f"{self.geometry.image_size}"
            )
        return self._kernels.forward(
            image, self._cos, self._sin, self.geometry.n_bins,
            self.geometry.bin_spacing,
        )

    def backproject_array(self, sino: np.ndarray) -> np.ndarray:
        if sino.shape != self.geometry.shape:
            raise ValueError(
                f"sinogram shape {sino.shape} does not match geometry "
                f"{self.geometry.shape}"
            )
        return self._kernels.backproject(
            sino, self._cos, self._sin, self.geometry.image_size,
            self.geometry.bin_spacing,
        )

    def _row_indices(self, rows: np.ndarray) -> np.ndarray:
        idx = np.asarray(rows)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("rows must be a non-empty 1-D index array")
        if not np.issubdtype(idx.dtype, np.integer):
            raise ValueError("rows must be integer angle indices")
        if idx.min() < 0 or idx.max() >= self.geometry.n_angles:
            raise ValueError("row index out of range for geometry")
        return idx.astype(np.int64)

    def forward_rows(self, image: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Forward projection restricted to the given angle indices.

        Returns a (len(rows), n_bins) float64 array whose k-th row equals
        row ``rows[k]`` of :meth:`forward_array` bit for bit; the cost scales
        with len(rows) instead of n_angles.
        """
        if image.shape != (self.geometry.image_size, self.geometry.image_size):
            raise ValueError(
                f"image shape {image.shape} does not match geometry size "
                f"{self.geometry.image_size}"
            )
        idx = self._row_indices(rows)
        return self._kernels.forward(
            image, self._cos[idx], self._sin[idx], self.geometry.n_bins,
            self.geometry.bin_spacing,
        )

    def backproject_rows(self, sino_rows: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`forward_rows` for the same angle indices.

        ``sino_rows`` has shape (len(rows), n_bins). Equivalent to embedding
        the rows in a zero sinogram and calling :meth:`backproject_array`,
        at a cost that scales with len(rows).
        """
        idx = self._row_indices(rows)
        if sino_rows.shape != (len(idx), self.geometry.n_bins):
            raise ValueError(
                f"sinogram rows shape {sino_rows.shape} does not match "
                f"({len(idx)}, {self.geometry.n_bins})"
            )
        return self._kernels.backproject(
            sino_rows, self._cos[idx], self._sin[idx], self.geometry.image_size,
            self.geometry.bin_spacing,
        )

    def forward(self, img: Image) -> Sinogram:
        """Line integrals of ``img`` along every (angle, bin) ray."""
        if img.size != self.geometry.image_size:
            raise ValueError(
                f"image size {img.size} does not match geometry size "
                f"{self.geometry.image_size}"
            )
        return Sinogram(self.geometry, self.forward_array(img.data.astype(np.float64)))

    def backproject(self, s: Sinogram) -> Image:
        """Exact adjoint of :meth:`forward` (transposed splat weights)."""
        if s.geometry != self.geometry:
            raise ValueError("sinogram geometry does not match projector")
        size = self.geometry.image_size
        return Image(size, size, self.backproject_array(s.data.astype(np.float64)))

    def sensitivity(self, mask: AngularMask | None = None) -> Image:
        """Backprojection of an all-ones sinogram (per-pixel detection weight).

        With a mask, only observed angular rows contribute.
        """
        ones = np.ones(self.geometry.shape, dtype=np.float64)
        if mask is not None:
            if mask.n_angles != self.geometry.n_angles:
                raise ValueError("mask does not match geometry")
            ones *= mask.observed_rows()[:, None]
        size = self.geometry.image_size
        return Image(size, size, self.backproject_array(ones))

    def sensitivity_array(self, mask: AngularMask | None = None) -> np.ndarray:
        ones = np.ones(self.geometry.shape, dtype=np.float64)
        if mask is not None:
            ones *= mask.observed_rows()[:, None]
        return self.backproject_array(ones)

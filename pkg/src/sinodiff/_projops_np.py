"""Vectorized numpy projector kernels (fallback backend).

Pixel-driven linear splat: each pixel deposits its value into the two
radial bins bracketing its signed offset x*cos + y*sin, with linear
weights. Backprojection applies the exact transpose (gather with the
same weights), so the pair is adjoint by construction.

Kept operation-for-operation in step with the compiled kernels in
``_projops.pyx`` so both backends produce identical float64 results.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _pixel_offsets(size: int, n_bins: int, cos_a: float, sin_a: float, spacing: float):
    c = (size - 1) / 2.0
    xs = np.arange(size, dtype=np.float64) - c
    s = (xs * cos_a)[None, :] + (xs * sin_a)[:, None]
    s = s / spacing + (n_bins - 1) / 2.0
    s = s.ravel()
    b = np.floor(s)
    idx = b.astype(np.int64)
    w1 = s - b
    w0 = 1.0 - w1
    return idx, w0, w1


def forward(image, cos_t, sin_t, n_bins, spacing=1.0):
    """Project a (size, size) float64 image to (n_angles, n_bins) float64."""
    image = np.ascontiguousarray(image, dtype=np.float64)
    size = image.shape[0]
    f = image.ravel()
    out = np.empty((len(cos_t), n_bins), dtype=np.float64)
    for k in range(len(cos_t)):
        idx, w0, w1 = _pixel_offsets(size, n_bins, cos_t[k], sin_t[k], spacing)
        c0 = w0 * f
        c1 = w1 * f
        ok0 = (idx >= 0) & (idx < n_bins)
        ok1 = (idx >= -1) & (idx < n_bins - 1)
        acc0 = np.bincount(idx[ok0], weights=c0[ok0], minlength=n_bins)
        acc1 = np.bincount(idx[ok1] + 1, weights=c1[ok1], minlength=n_bins)
        out[k] = acc0 + acc1
    return out


def backproject(sino, cos_t, sin_t, size, spacing=1.0):
    """Adjoint of :func:`forward`: (n_angles, n_bins) -> (size, size) float64."""
    sino = np.ascontiguousarray(sino, dtype=np.float64)
    n_bins = sino.shape[1]
    img = np.zeros(size * size, dtype=np.float64)
    for k in range(sino.shape[0]):
        idx, w0, w1 = _pixel_offsets(size, n_bins, cos_t[k], sin_t[k], spacing)
        g = sino[k]
        ok0 = (idx >= 0) & (idx < n_bins)
        ok1 = (idx >= -1) & (idx < n_bins - 1)
        v0 = np.where(ok0, g[np.clip(idx, 0, n_bins - 1)], 0.0)
        v1 = np.where(ok1, g[np.clip(idx + 1, 0, n_bins - 1)], 0.0)
        img += w0 * v0 + w1 * v1
    return img.reshape(size, size)

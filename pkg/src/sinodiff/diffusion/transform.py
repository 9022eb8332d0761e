"""Value-range mapping between count space and the network's [-1, 1] range,
condition-channel assembly, and the observed-bin merge rule.
"""

from __future__ import annotations

import numpy as np

from ..grid import Sinogram
from ..masking import AngularMask, to_bin_mask

# Depth of the masked reconstruction behind consistency_fill. The masked
# data model converges slowly in the wedge directions, and the quality of
# the reprojected fill keeps climbing well past the point where the image
# itself looks settled, so this is much deeper than a display-grade solve:
# ordered subsets advance roughly n_subsets iterations per pass, putting the
# effective depth near FILL_ITERATIONS * FILL_SUBSETS at the cost of a
# FILL_ITERATIONS-deep plain solve.
FILL_ITERATIONS = 400
FILL_SUBSETS = 16


def _data(x) -> np.ndarray:
    return np.asarray(getattr(x, "data", x))


def normalize(s, scale: float) -> np.ndarray:
    """x -> 2*(x/scale) - 1, mapping [0, scale] onto [-1, 1]."""
    if scale <= 0:
        raise ValueError("scale must be strictly positive")
    return (2.0 / scale) * _data(s).astype(np.float64) - 1.0


def denormalize(z, scale: float) -> np.ndarray:
    """Exact inverse of normalize: z -> (z + 1)/2 * scale."""
    if scale <= 0:
        raise ValueError("scale must be strictly positive")
    return (_data(z).astype(np.float64) + 1.0) * (scale / 2.0)


def consistency_fill(la: Sinogram, mask: AngularMask) -> Sinogram:
    """Fill the missing wedge with a physics-consistent initial estimate:
    reconstruct from the observed rows alone (masked data model), then forward
    project that image into the wedge. Observed rows are copied bit-exactly.

    The filled wedge carries no information beyond the measurements, but it
    hands the denoiser a starting point that is already consistent, so the
    network only has to learn prior-driven corrections.
    """
    from ..mlem import OsemConfig, osem_reconstruct
    from ..projector import Projector

    if mask.n_angles != la.geometry.n_angles:
        raise ValueError("mask angle count does not match sinogram geometry")
    if mask.n_missing == 0:
        return Sinogram(la.geometry, la.data.copy())
    if mask.n_observed == 0:
        return Sinogram(la.geometry, np.zeros_like(la.data))
    proj = Projector(la.geometry)
    subsets = min(FILL_SUBSETS, mask.n_observed)
    image = osem_reconstruct(
        proj, la,
        OsemConfig(n_iterations=FILL_ITERATIONS, n_subsets=subsets, mask=mask),
    )
    reproj = proj.forward(image)
    rows = mask.observed_rows().astype(bool)
    out = reproj.data.copy()
    out[rows] = la.data[rows]
    return Sinogram(la.geometry, out)


def conditioning(la: Sinogram, mask: AngularMask, scale: float) -> np.ndarray:
    """Stack the two condition channels, shape (2, n_angles, n_bins) float32.

    Channel 0: the normalized limited-angle sinogram, with the missing wedge
    pre-filled by :func:`consistency_fill` so the network conditions on a
    complete, physically consistent sinogram estimate rather than on zeros.
    Channel 1: the bin mask (1 observed, 0 missing).
    """
    bins = to_bin_mask(mask, la.geometry).data
    ch0 = normalize(consistency_fill(la, mask), scale).astype(np.float32)
    return np.stack([ch0, bins.astype(np.float32)])


def merge_prediction(pred: Sinogram, observed: Sinogram, mask: AngularMask) -> Sinogram:
    """Observed bins are copied from ``observed`` unchanged; missing bins are
    filled from ``pred``.
    """
    if pred.geometry != observed.geometry:
        raise ValueError("prediction and observed sinograms have different geometries")
    if mask.n_angles != pred.geometry.n_angles:
        raise ValueError("mask angle count does not match sinogram geometry")
    rows = mask.observed_rows().astype(bool)
    out = pred.data.copy()
    out[rows] = observed.data[rows]
    return Sinogram(pred.geometry, out)

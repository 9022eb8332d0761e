"""sinodiff: limited-angle sinogram simulation, diffusion inpainting, and
MLEM reconstruction at desk scale.
"""

from .grid import Image, ProjectionGeometry, Sinogram, new_image, sinogram_total
from .masking import (
    AngularMask,
    apply_mask,
    interpolate_wedge,
    random_mask,
    to_bin_mask,
)
from .metrics import psnr
from .mlem import MlemConfig, OsemConfig, osem_reconstruct, reconstruct
from .phantom import EllipseSpec, random_phantom, rasterize
from .projector import BACKEND, Projector, available_backends

__version__ = "0.1.0"

__all__ = [
    "Image",
    "ProjectionGeometry",
    "Sinogram",
    "new_image",
    "sinogram_total",
    "AngularMask",
    "apply_mask",
    "interpolate_wedge",
    "random_mask",
    "to_bin_mask",
    "psnr",
    "MlemConfig",
    "OsemConfig",
    "osem_reconstruct",
    "reconstruct",
    "EllipseSpec",
    "random_phantom",
    "rasterize",
    "BACKEND",
    "Projector",
    "available_backends",
    "__version__",
]

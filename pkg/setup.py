import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off keeps the C kernels bit-compatible with the numpy
# fallback (no FMA contraction of the interpolation arithmetic).
ext = Extension(
    "sinodiff._projops",
    sources=["src/sinodiff/_projops.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    optional=True,
)

setup(
    ext_modules=cythonize([ext], compiler_directives={"language_level": "3"})
    if cythonize
    else [],
)

"""Builds the compiled kernel backend.

The extension is optional: when Cython or a C compiler is missing the
package installs anyway and `zvpred.kernels` falls back to the numpy
backend. fp-contract is disabled so the compiled kernels round exactly
like the numpy ones (no fused multiply-add).
"""
import numpy as np
from setuptools import Extension, setup

ext = Extension(
    "zvpred._kernels",
    ["src/zvpred/_kernels.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    optional=True,
)

try:
    from Cython.Build import cythonize

    extensions = cythonize([ext], language_level=3)
except ImportError:
    extensions = []

setup(ext_modules=extensions)

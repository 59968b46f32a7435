"""Build script for the compiled path-integration kernel.

The kernel must produce bit-identical results to the pure-numpy fallback,
so floating-point contraction (FMA) is disabled and fast-math is never used.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "stochmech._kernels._core",
        sources=["src/stochmech/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))

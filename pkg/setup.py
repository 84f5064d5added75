"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a NumPy reference backend is
selected at import time), so the extension can be skipped by setting
DELAYSNN_SKIP_EXTENSION=1 in the environment.
"""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("DELAYSNN_SKIP_EXTENSION") == "1":
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "delaysnn._kernels._fast",
        ["src/delaysnn/_kernels/_fast.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off keeps the compiled kernels bit-identical to the
        # NumPy reference backend (no FMA contraction).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions())

"""Build the optional compiled collision core.

The package works without the extension (a numpy fallback is selected at
import time); the extension makes the reference-resolution runs fit their
time budgets on one core.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # source tree without Cython: ship pure python
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "mskinet._core._collide",
                ["src/mskinet/_core/_collide.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)

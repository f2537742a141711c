"""Build script for the optional compiled kernel extension.

The package works without the extension (a NumPy/SciPy fallback is selected
at import time); building it just makes the per-step integrator loops fast.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "sabrashell._kernels._core_cy",
                ["src/sabrashell/_kernels/_core_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

"""Builds the compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), but the compiled core is what makes large-population runs fast.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps the compiled kernels bit-identical to the numpy
# fallback (no FMA contraction of a*x + b*y).
extensions = [
    Extension(
        "smfg._kernels._core",
        sources=["src/smfg/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
        },
    )
)

"""Build script for the compiled tree kernel.

The package works without the extension (a pure-NumPy kernel is selected
at import time), so a failed compile only costs speed.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "sitabench.models._tree_cy",
        ["src/sitabench/models/_tree_cy.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
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
            "cdivision": True,
        },
    )
    if cythonize is not None
    else [],
)

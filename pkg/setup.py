"""Build script: compiles the optional GF(2^m)/BCH extension.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time), so any failure to cythonize or
compile degrades to a source-only install instead of aborting.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "loraskg._kernels._gf2bch_cy",
                ["src/loraskg/_kernels/_gf2bch_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)

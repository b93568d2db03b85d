"""Build script.  Compiles the optional Cython kernel extension.

If Cython or a C compiler is unavailable the build still succeeds and the
package falls back to the pure-numpy kernels at import time.  Set
CRACKFEM_NO_EXT=1 to skip the extension on purpose.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("CRACKFEM_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "crackfem._kernels_cy",
                    ["src/crackfem/_kernels_cy.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except Exception as exc:  # pragma: no cover - build-environment dependent
        print(f"crackfem: skipping compiled kernels ({exc}); "
              "pure-python fallback will be used")

setup(ext_modules=ext_modules)

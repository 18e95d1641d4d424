"""Build script for the optional compiled numerics core.

The extension accelerates the Cholesky kernels used in every bandit round.
If Cython or a C compiler is unavailable the install still succeeds and the
package falls back to the pure numpy/scipy backend at import time.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "consbandit.numerics._spdcore",
                ["src/consbandit/numerics/_spdcore.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)

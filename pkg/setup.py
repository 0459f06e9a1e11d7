import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("HOPSCAN_SKIP_EXT") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "hopscan._kernel",
                sources=["src/hopscan/_kernel.pyx"],
                include_dirs=[np.get_include()],
                language="c++",
                extra_compile_args=["-O3", "-std=c++11"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)

"""Build script for the compiled kernel core.

    python setup.py build_ext --inplace

compiles ``fblin.backends._core``; without it the package transparently
falls back to the numpy kernels.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "fblin.backends._core",
        ["src/fblin/backends/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions) if cythonize else [])

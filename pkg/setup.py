"""Build script: compiles the optional statevector-kernel extension.

The package is fully functional without the extension (a numpy twin of every
kernel ships in ``excitonspec._kernels._numpy``); set EXCITONSPEC_NO_EXTENSION=1
to skip compilation.
"""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("EXCITONSPEC_NO_EXTENSION"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "excitonspec._kernels._core",
        ["src/excitonspec/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())

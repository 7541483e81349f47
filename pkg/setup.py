"""Build script for the optional compiled sweep kernel.

The package is pure Python apart from ``snlbcd._kernels._sweep_cy``; if the
extension fails to build or import, the numpy fallback kernel is used instead.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "snlbcd._kernels._sweep_cy",
        ["src/snlbcd/_kernels/_sweep_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)

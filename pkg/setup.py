"""Build script for the compiled weight-accumulation core.

The extension is optional at runtime: if it fails to build or import, the
package falls back to the NumPy implementation in ``tvspec._accel_py``.
"""
import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

ext_modules = [
    Extension(
        "tvspec._accel",
        ["src/tvspec/_accel.pyx"],
        extra_compile_args=["-O3", "-fopenmp", "-march=native", "-funroll-loops"],
        extra_link_args=["-fopenmp"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        ext_modules,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
)

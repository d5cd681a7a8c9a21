"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension; ``mixbal.backend``
falls back to the numpy kernels when ``mixbal._kernels`` is absent.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/mixbal/_kernels.pyx",
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
    include_dirs = [numpy.get_include()]
except ImportError:
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)

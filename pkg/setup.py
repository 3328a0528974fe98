"""Build script for the compiled tracing kernel.

The package works without the extension (a pure-Python kernel is selected at
import time), so a missing compiler or Cython only costs speed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "torusatlas.kernel._fastcore",
                ["src/torusatlas/kernel/_fastcore.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

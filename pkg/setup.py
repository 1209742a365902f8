"""Build script: compiles the optional Cython geometry kernels.

The package works without the extension (a pure-Python backend is selected
at import time), so any build failure here downgrades to a warning.

    python setup.py build_ext --inplace
"""
import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "rboxkit._ckernels",
                sources=["src/rboxkit/_ckernels.pyx"],
                # keep C arithmetic bit-compatible with the pure backend:
                # no FMA contraction, strict IEEE double ops
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    sys.stderr.write(
        "rboxkit: Cython not available, building without compiled kernels\n"
    )

setup(ext_modules=ext_modules)

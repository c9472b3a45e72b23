"""Build script: compiles the optional Cython kernel core.

The package works without the extension (a pure numpy fallback is selected
at import time), so a failing C build downgrades to a warning instead of
aborting the install. Set OMNIBOX_NO_EXT=1 to skip the extension entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that degrades to the pure-python fallback on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building the omnibox compiled kernels failed ({exc}); "
            "falling back to the pure numpy implementation.",
            file=sys.stderr,
        )


ext_modules = []
cmdclass = {}
if os.environ.get("OMNIBOX_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext = Extension(
            "omnibox.kernels._core",
            ["src/omnibox/kernels/_core.pyx"],
            include_dirs=[numpy.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize([ext], language_level=3)
        cmdclass["build_ext"] = OptionalBuildExt
    except ImportError as exc:
        print(f"WARNING: Cython/numpy unavailable at build time ({exc}); "
              "skipping compiled kernels.", file=sys.stderr)

setup(ext_modules=ext_modules, cmdclass=cmdclass)

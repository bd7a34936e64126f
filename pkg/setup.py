"""Build script for the optional compiled filter core.

The package is fully functional without the extension (a numpy fallback is
selected at import time); the build therefore degrades gracefully when no
C compiler or Cython is available.
"""
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; warn and continue otherwise."""

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
            f"warning: compiled core not built ({exc}); "
            "falling back to the pure-numpy backend",
            file=sys.stderr,
        )


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(
            f"warning: {exc}; building without the compiled core",
            file=sys.stderr,
        )
        return []
    ext = Extension(
        "ringbf._core",
        sources=["src/ringbf/_core.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off: no FMA fusion, so results are bit-comparable
        # with the numpy backend's pinned accumulation order.
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=_extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)

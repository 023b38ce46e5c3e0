"""Build script: compiles the optional scanner speedup extension.

The extension is a performance accelerator only; if Cython or a C compiler
is unavailable the package installs pure-Python and selects the fallback
kernel at import time.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Never fail the install because the accelerator would not compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, broken toolchain, ...
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(f"warning: building qeforge._speedups failed ({exc}); "
              "falling back to the pure-Python scanner")


def extensions():
    if os.environ.get("QEFORGE_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension("qeforge._speedups", ["src/qeforge/_speedups.pyx"])],
        language_level="3",
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)

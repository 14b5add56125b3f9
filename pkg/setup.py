"""Build script: compiles the optional extension core.

The package is fully functional without the extension (pure-Python kernels
are selected at import time), so a failed compile downgrades to a warning
instead of aborting the install.  Set DOFCLUSTER_NO_EXT=1 to skip the
extension build entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
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
            f"WARNING: building the dofcluster._kernels extension failed ({exc}); "
            "falling back to the pure-Python kernels.",
            file=sys.stderr,
        )


def extensions():
    if os.environ.get("DOFCLUSTER_NO_EXT") == "1":
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not available; skipping extension build.", file=sys.stderr)
        return []
    ext = Extension(
        "dofcluster._kernels",
        ["src/dofcluster/_kernels.pyx"],
        extra_compile_args=["-O2"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})

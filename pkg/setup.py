"""Build script: optionally compiles the interpreter kernel with Cython.

``speceval.runtime.evalcore`` is plain Python and works as-is; when Cython
and a C compiler are available it is additionally compiled into the
extension ``speceval.runtime._evalcore`` (same single source, no fork).
``speceval.runtime`` prefers the extension at import time and falls back to
the pure module. Set SPECEVAL_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SPECEVAL_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "speceval.runtime._evalcore",
                    ["src/speceval/runtime/evalcore.py"],
                )
            ],
            language_level="3",
            quiet=True,
        )
    except Exception:
        ext_modules = []

setup(ext_modules=ext_modules)

"""Build script: compiles the optional edit-distance extension when Cython is
available. Without Cython (or with COLEXGAME_PURE_PYTHON=1) the package
installs fine and falls back to the pure-Python kernel at import time."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("COLEXGAME_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "colexgame._editdist",
                    sources=["src/colexgame/_editdist.pyx"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)

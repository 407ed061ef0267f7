"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so the extension is marked optional and build failures are
non-fatal. Set GPQUBO_NO_EXTENSION=1 to skip the compiled kernels entirely.
"""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("GPQUBO_NO_EXTENSION"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "gpqubo.backend._ckernels",
        sources=["src/gpqubo/backend/_ckernels.pyx"],
        optional=True,
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())

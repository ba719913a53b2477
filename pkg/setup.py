"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: ``stabcert.kernels``
falls back to numpy implementations at import time.  The extension is built
when Cython and a C compiler are available and skipped otherwise.
"""

from setuptools import setup

ext_modules = []
include_dirs = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    # -ffp-contract=off keeps the compiled kernels bit-identical to the
    # numpy fallback (no fused multiply-add in the pivot update).
    ext = Extension(
        "stabcert._native",
        sources=["src/stabcert/_native.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

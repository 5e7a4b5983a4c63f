"""Build the compiled render kernel.

The kernel source lives at src/cinevol/_kernel.py (Cython pure-python
mode): the same file runs interpreted as a fallback and compiles to the
cinevol._kernel_c extension for production speed.  If no C compiler is
available the package still installs and uses the interpreted kernel.
"""

import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None


def extensions():
    if cythonize is None or os.environ.get("CINEVOL_NO_EXT"):
        return []
    ext = Extension(
        "cinevol._kernel_c",
        ["src/cinevol/_kernel.py"],
        extra_compile_args=["-O3", "-fopenmp", "-ffp-contract=off"],
        extra_link_args=["-fopenmp"],
    )
    return cythonize([ext], language_level=3, annotate=False)


setup(ext_modules=extensions())

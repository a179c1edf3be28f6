"""Build hook for the optional compiled fitness kernel.

Project metadata lives in pyproject.toml. When Cython or a C compiler is
missing the extension is skipped and the numpy fallback is used.
"""

import sys

from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
    ext_modules = cythonize(
        [
            Extension(
                "genmotif._ckernels",
                ["src/genmotif/_ckernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"] + openmp,
                extra_link_args=openmp,
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)

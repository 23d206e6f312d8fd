import os

import numpy as np
from setuptools import Extension, setup

# SHEFORGE_NO_EXT=1 installs the pure-Python fallback only.
ext_modules = []
if not os.environ.get("SHEFORGE_NO_EXT"):
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "sheforge._native",
            ["src/sheforge/_native.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )

setup(ext_modules=ext_modules)

import os

import numpy as np
from setuptools import Extension, setup

# JAMDETECT_NO_EXT=1 installs the pure-Python package only.
ext_modules = []
if not os.environ.get("JAMDETECT_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "jamdetect._kernel",
                ["src/jamdetect/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)

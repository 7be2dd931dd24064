import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("INTDIFF_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "intdiff._core",
                    ["src/intdiff/_core.pyx"],
                    include_dirs=[np.get_include()],
                    # no FMA contraction: keeps results bitwise equal to the Python fallback
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

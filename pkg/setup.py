import os

from setuptools import setup

ext_modules = []
if os.environ.get("KAKUTANI_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "kakutani._kernels",
                    ["src/kakutani/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)

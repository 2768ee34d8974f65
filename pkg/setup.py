"""Build script for the compiled search kernel.

The extension is optional: if Cython or a C toolchain is unavailable the
package installs without it and `promptknn.kernels` falls back to the
pure-numpy implementation at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "promptknn.kernels._topk",
                ["src/promptknn/kernels/_topk.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)

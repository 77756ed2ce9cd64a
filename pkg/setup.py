"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure numpy/Python fallback is
selected at import time), so the extension is marked optional: a failed
compile degrades to the fallback instead of failing the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "veintree.kernels._native",
                sources=["src/veintree/kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps scalar C arithmetic bit-identical
                # to numpy's elementwise float64 ops (no FMA contraction),
                # which the fallback-equivalence tests rely on.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

"""Builds the optional compiled scoring kernel; the package works without it."""
from setuptools import setup

ext_modules = []
try:
    import numpy  # noqa: F401
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:
    pass
else:
    ext_modules = cythonize(
        [
            Extension(
                "edgeoffload._kernels",
                ["src/edgeoffload/_kernels.pyx"],
                # no FMA contraction: results must match the Python kernel bit for bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)

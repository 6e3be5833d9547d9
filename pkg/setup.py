import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# The compiled core is optional: if the build fails (no compiler, no FMA),
# the package falls back to the pure-numpy kernels at import time.
extensions = [
    Extension(
        "lapbcv._kernels._core",
        ["src/lapbcv/_kernels/_core.pyx"],
        extra_compile_args=["-O3", "-fopenmp", "-mfma", "-ffp-contract=off"],
        extra_link_args=["-fopenmp"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))

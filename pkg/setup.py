import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize(
        [
            Extension(
                "feaslab._core",
                ["src/feaslab/_core.pyx"],
                include_dirs=[numpy.get_include()],
                # fp-contract off: float results must match the pure-Python
                # backend bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
)

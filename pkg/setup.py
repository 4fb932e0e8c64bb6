import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "gobfid._kernels._loop_cy",
                ["src/gobfid/_kernels/_loop_cy.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython at build time: install pure-python only, the package
    # falls back to the numpy loop at import.
    ext_modules = []

setup(ext_modules=ext_modules)

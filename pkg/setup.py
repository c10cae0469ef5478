"""Build script: compiles the optional circuit-evaluation kernels.

The package is fully functional without the extension; ``lpwmc.circuit``
falls back to the pure-Python kernels if the build was skipped or failed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        [
            Extension(
                "lpwmc._kernels",
                ["src/lpwmc/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

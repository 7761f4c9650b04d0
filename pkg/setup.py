"""Build script for the compiled stepping kernels.

The extension is optional at runtime: transhape falls back to the pure-Python
kernels in ``transhape._ode_py`` when ``transhape._ode_cy`` is missing.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "transhape._ode_cy",
                ["src/transhape/_ode_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)

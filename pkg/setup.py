"""Build script: compiles the stepping kernel when Cython and a C compiler
are available; the package falls back to the pure-Python kernel otherwise."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [Extension("anonmutex._kernel", ["src/anonmutex/_kernel.pyx"],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)

"""Build script: compiles the interior-point core extension when Cython and a
C toolchain are available.  The package works without it (pure-NumPy fallback
in mixedfleet.solver._ipm_py), just slower on large sweeps."""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "mixedfleet.solver._ipm",
                ["src/mixedfleet/solver/_ipm.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)

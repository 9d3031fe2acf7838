import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FEDOFFLOAD_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "fedoffload._ckernels",
                    ["src/fedoffload/_ckernels.pyx"],
                    # no -ffast-math / -march=native: results must match the Python fallback bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

import os
import sys

from setuptools import Extension, setup

# The compiled stepping kernel is optional: the package falls back to the
# pure-Python integrator core when the extension is absent.
ext_modules = []
_PYX = os.path.join("src", "shrinklab", "_profile_kernel.pyx")
try:
    from Cython.Build import cythonize

    if os.path.exists(_PYX):
        ext_modules = cythonize(
            [
                Extension(
                    "shrinklab._profile_kernel",
                    [_PYX],
                    # -ffp-contract=off keeps the C arithmetic bit-identical
                    # to the pure-Python fallback (no FMA contraction).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
except ImportError:
    print("Cython not available; building without the compiled kernel.", file=sys.stderr)

setup(ext_modules=ext_modules)

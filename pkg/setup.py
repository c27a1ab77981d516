"""Build hooks for the optional compiled kernel lane.

The package works without the extension (a numpy fallback with the same
floating-point operation order is selected at import), so a failed compile
only costs speed, never correctness.
"""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "jacspec.kernels._ckernels",
                ["src/jacspec/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: the fallback lane does separate
                # multiply/add, so FMA contraction here would break the
                # bit-identity contract between the two lanes.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"warning: compiled kernels unavailable ({exc}); using fallback lane", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)

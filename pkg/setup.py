"""Build script: compiles the optional fast kernels, falls back to pure Python.

The package is fully functional without the extension; newsprism._kernels
selects the numpy implementation at import when the compiled module is
missing.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "newsprism._kernels._ops",
                ["src/newsprism/_kernels/_ops.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    import sys

    print(f"newsprism: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)

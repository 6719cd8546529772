"""Build script: compiles the optional batched-MLP kernel.

The extension is a speedup, not a requirement; if the C toolchain is
missing the install proceeds and selpde falls back to its numpy kernels.
"""

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler, broken headers, ...
            print(f"warning: compiled kernel skipped ({exc}); using numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); using numpy fallback")


def extensions():
    from Cython.Build import cythonize

    ext = Extension(
        "selpde._kernels._core",
        ["src/selpde/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})

"""Build the optional Cython walk kernel; the package runs without it."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("GWCOVER_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        # numpy ships its C distributions (ziggurat normals) as a static library
        npyrandom = os.path.join(os.path.dirname(np.__file__), "random", "lib")
        ext_modules = cythonize(
            [
                Extension(
                    "gwcover._kernels._walk_ext",
                    ["src/gwcover/_kernels/_walk_ext.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                ),
                Extension(
                    "gwcover._kernels._dgff_ext",
                    ["src/gwcover/_kernels/_dgff_ext.pyx"],
                    include_dirs=[np.get_include()],
                    library_dirs=[npyrandom],
                    libraries=["npyrandom"],
                    extra_compile_args=["-O3"],
                ),
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

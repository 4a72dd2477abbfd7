"""Build script: compiles the optional Cython kernel core.

The compiled extension is a performance twin of quclab._kernels_np; the
package falls back to the pure-numpy implementation if the build fails,
so compilation errors are deliberately non-fatal.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/quclab/_kernels_c.pyx"],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
    include_dirs = [numpy.get_include()]
    for ext in ext_modules:
        ext.include_dirs = include_dirs
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"quclab: skipping Cython core ({exc}); pure-numpy kernels will be used", file=sys.stderr)

setup(ext_modules=ext_modules)

"""Build shim for the optional compiled stepper kernel.

The package works without the extension (a SciPy-backed fallback is picked
at import time); building it just makes the inner time-stepping loop fast.
"""

from setuptools import Extension, setup


def make_extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "diskheat._stepper",
        ["src/diskheat/_stepper.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=make_extensions())

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    ext = Extension(
        "gyropic.kernels._accel",
        ["src/gyropic/kernels/_accel.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    # Build failures fall back to the pure-NumPy kernels selected at import.
    ext.optional = True
    extensions = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=extensions)

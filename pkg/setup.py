import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools.extension import Extension
except ImportError:  # numpy fallback is used at runtime
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("coredrift.predictor._lstm_cy", ["src/coredrift/predictor/_lstm_cy.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3", "-fno-math-errno"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)

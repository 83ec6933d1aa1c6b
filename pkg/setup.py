import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

ext_modules = [
    Extension(
        "airtree.topology.kernels._thin",
        ["src/airtree/topology/kernels/_thin.pyx"],
        extra_compile_args=["-O3"],
        include_dirs=[numpy.get_include()],
    )
]

setup(ext_modules=cythonize(ext_modules, language_level=3))

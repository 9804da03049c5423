"""Builds the optional compiled walk kernel; the package works without it."""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SGE_NO_EXTENSION"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("sge._walk_core", ["src/sge/_walk_core.pyx"],
                       extra_compile_args=["-O3", "-fopenmp"],
                       extra_link_args=["-fopenmp"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)

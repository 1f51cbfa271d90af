from setuptools import Extension, setup

# The compiled kernel is optional: prosub.kernel falls back to the pure-Python
# twin (prosub._kernel_py) when the extension is absent.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("prosub._kernel", ["src/prosub/_kernel.pyx"])],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)

"""Build script compiling the hot simulation kernel with Cython.

The kernel source src/hxsim/_kernel.py is valid plain Python (Cython
pure-python mode).  When Cython is available it is compiled into the
extension module hxsim._kernel_c; otherwise the interpreted fallback is
used, selected at import time in hxsim.core.
"""

import os
import shutil
from pathlib import Path

from setuptools import setup

os.chdir(Path(__file__).parent)

ext_modules = []
try:
    from Cython.Build import cythonize

    src = Path("src") / "hxsim" / "_kernel.py"
    if src.exists():
        dup = src.with_name("_kernel_c.py")
        # Cython derives the module name from the file name, so compile a copy.
        if not dup.exists() or dup.read_bytes() != src.read_bytes():
            shutil.copyfile(src, dup)
        ext_modules = cythonize(
            [str(dup)],
            language_level=3,
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "initializedcheck": False,
                "cdivision": True,
            },
        )
except ImportError:
    pass

setup(ext_modules=ext_modules)

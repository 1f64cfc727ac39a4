"""Builds the `shortvol_py` extension module by delegating to cargo.

The Rust crate in this directory is a cdylib; `build_ext` compiles it in
release mode and copies the shared library to wherever setuptools expects
the extension artifact.  Requires a Rust toolchain on PATH.
"""

import os
import shutil
import subprocess
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

CRATE_DIR = Path(__file__).resolve().parent


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "shortvol-py"],
            cwd=CRATE_DIR,
            check=True,
        )
        target_dir = Path(
            os.environ.get("CARGO_TARGET_DIR", CRATE_DIR.parent.parent / "target")
        )
        libname = "libshortvol_py.dylib" if os.uname().sysname == "Darwin" else "libshortvol_py.so"
        built = target_dir / "release" / libname
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(built, dest)


setup(
    ext_modules=[Extension("shortvol_py", sources=[])],
    cmdclass={"build_ext": CargoBuildExt},
)

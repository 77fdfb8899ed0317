"""Select the reduction kernels at import time.

The compiled extension is used when it imports; ``CUBEDISP_BACKEND=python``
forces the pure-Python fallback.
"""

import os

from . import _pykernels

python_kernels = _pykernels

try:
    from . import _kernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("CUBEDISP_BACKEND", "").lower() != "python":
    kernels = compiled_kernels
    NAME = "cython"
else:
    kernels = _pykernels
    NAME = "python"


def get(name: str | None = None):
    """Kernel module by name (``"cython"`` / ``"python"``); default is the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        if compiled_kernels is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")

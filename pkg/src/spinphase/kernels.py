"""Kernel dispatch: the compiled extension when it imports, else pure Python.

Set ``SPINPHASE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("SPINPHASE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

threej_series = _impl.threej_series
multiply_kernel = _impl.multiply_kernel

__all__ = ["BACKEND", "threej_series", "multiply_kernel"]

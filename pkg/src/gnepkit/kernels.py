"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``GNEPKIT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("GNEPKIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

dykstra = _impl.dykstra
box_qp = _impl.box_qp

__all__ = ["BACKEND", "dykstra", "box_qp"]

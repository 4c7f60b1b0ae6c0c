"""Kernel dispatch: the compiled extension when built, pure Python otherwise.

Set ``PAIRPREF_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

try:
    if os.environ.get("PAIRPREF_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py

lil_ucb_pulls = _impl.lil_ucb_pulls


def get(backend: str):
    """Kernel module for ``"cython"`` or ``"python"``; raises if unavailable."""
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")

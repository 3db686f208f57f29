"""Selects the compiled scoring kernel when built, else the pure-Python one.

Set ``EDGEOFFLOAD_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

DAPA = 0
UE = 1

_impl = _kernels_py
if os.environ.get("EDGEOFFLOAD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"
best_pair = _impl.best_pair
python_best_pair = _kernels_py.best_pair


def compiled_best_pair():
    """The compiled kernel, or None if the extension was not built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels.best_pair

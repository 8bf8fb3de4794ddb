"""Hot kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it imports cleanly; set
``SALLOSS_PURE=1`` to force the fallback.
"""
import os

from . import _pure

try:
    if os.environ.get("SALLOSS_PURE", "") not in ("", "0"):
        raise ImportError("pure backend forced")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pure
    BACKEND = "python"

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
transport_simplex = _impl.transport_simplex


def get_backend(name: str):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pure
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")

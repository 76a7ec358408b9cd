"""Kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the
numpy fallback takes over.  Set SCHURRNN_FORCE_PYTHON=1 to force the
fallback (used by the parity tests and the benchmark)."""

import os

from . import _kernels_py

if os.environ.get("SCHURRNN_FORCE_PYTHON"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py


def backend_name():
    return kernels.BACKEND


def get_kernels(force=None):
    """Return a kernels module: 'python', 'compiled', or None for the
    import-time default."""
    if force is None:
        return kernels
    if force == "python":
        return _kernels_py
    if force == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {force!r}")

"""Kernel backend selection.

The compiled extension (``rainlens._kernels._native``) is preferred when it
imported cleanly; otherwise the numpy fallback is used. Set the environment
variable ``RAINLENS_KERNELS`` to ``native`` or ``numpy`` to force a backend;
forcing ``native`` when the extension is not built raises ImportError.
"""

import os

from . import _numpy

_requested = os.environ.get("RAINLENS_KERNELS", "").strip().lower()
if _requested not in ("", "native", "numpy"):
    raise ImportError(
        f"RAINLENS_KERNELS must be 'native' or 'numpy', got {_requested!r}")

_impl = None
if _requested in ("", "native"):
    try:
        from . import _native as _impl
    except ImportError:
        if _requested == "native":
            raise ImportError(
                "RAINLENS_KERNELS=native but the compiled extension is not "
                "available; build it with 'python setup.py build_ext --inplace'")
        _impl = None

if _impl is None:
    _impl = _numpy

BACKEND = "native" if _impl is not _numpy else "numpy"

refract_sample = _impl.refract_sample
splat_drop = _impl.splat_drop
finalize_composite = _impl.finalize_composite


def backend_name():
    """Name of the kernel backend selected at import time."""
    return BACKEND


def available_backends():
    """Mapping of backend name to kernel module, for parity tests and benchmarks."""
    backends = {"numpy": _numpy}
    try:
        from . import _native
        backends["native"] = _native
    except ImportError:
        pass
    return backends

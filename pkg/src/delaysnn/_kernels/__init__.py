"""Backend selection for the per-layer time-loop kernels.

The compiled Cython extension is used when it imported successfully;
otherwise the NumPy reference backend takes over.  Set
``DELAYSNN_FORCE_FALLBACK=1`` to ignore the extension (used by the
benchmark and the backend-equivalence tests).
"""

import os

from . import reference

if os.environ.get("DELAYSNN_FORCE_FALLBACK") == "1":
    _impl = reference
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = reference

BACKEND_NAME = _impl.BACKEND_NAME

spiking_forward = _impl.spiking_forward
readout_forward = _impl.readout_forward
spiking_backward = _impl.spiking_backward
readout_backward = _impl.readout_backward


def backend_name() -> str:
    """Name of the active kernel backend ("compiled" or "reference")."""
    return BACKEND_NAME


def get_backend(name: str):
    """Fetch a kernel backend module by name, independent of the active one."""
    if name == "reference":
        return reference
    if name == "compiled":
        from . import _fast

        return _fast
    raise ValueError(f"unknown backend {name!r}")

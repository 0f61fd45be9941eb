"""Kernel backend selection.

The compiled extension is preferred when present; the numpy fallback is
always available. ``DSPN_KERNELS=python`` or ``DSPN_KERNELS=cython`` forces
a backend (the latter raises if the extension was never built).
"""

import contextlib
import os

from . import _pykernels

_BACKENDS = {"python": _pykernels}

try:
    from . import _cykernels

    _BACKENDS["cython"] = _cykernels
except ImportError:
    _cykernels = None


def _select_default():
    requested = os.environ.get("DSPN_KERNELS", "").strip().lower()
    if requested:
        if requested not in _BACKENDS:
            raise RuntimeError(
                f"DSPN_KERNELS={requested!r} not available; "
                f"built backends: {sorted(_BACKENDS)}"
            )
        return _BACKENDS[requested]
    return _BACKENDS.get("cython", _pykernels)


kernels = _select_default()


def backend_name():
    return kernels.BACKEND_NAME


def available_backends():
    return sorted(_BACKENDS)


def set_backend(name):
    """Switch the active kernel set; returns the previous backend name."""
    global kernels
    if name not in _BACKENDS:
        raise RuntimeError(f"backend {name!r} not available; built: {sorted(_BACKENDS)}")
    previous = kernels.BACKEND_NAME
    kernels = _BACKENDS[name]
    return previous


@contextlib.contextmanager
def use_backend(name):
    previous = set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)

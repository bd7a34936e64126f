"""Compute-backend selection.

Two interchangeable backends provide the hot kernels: the compiled Cython
extension ``ringbf._core`` and the pure-numpy fallback ``ringbf._core_py``.
Selection honors the ``RINGBF_BACKEND`` environment variable:

- ``auto`` (default): compiled if importable, else pure numpy;
- ``cython``: require the compiled core (ImportError if missing);
- ``python``: force the pure-numpy fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _core_py

_ENV_VAR = "RINGBF_BACKEND"
_CHOICES = ("auto", "cython", "python")


def load_backend(name: str | None = None) -> ModuleType:
    """Return the backend module for ``name`` (defaults to the environment choice)."""
    if name is None:
        name = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if name not in _CHOICES:
        raise ValueError(f"{_ENV_VAR} must be one of {_CHOICES}, got {name!r}")
    if name == "python":
        return _core_py
    try:
        from . import _core
        return _core
    except ImportError:
        if name == "cython":
            raise ImportError(
                "compiled backend requested via RINGBF_BACKEND=cython "
                "but ringbf._core is not built"
            ) from None
        return _core_py


_active = load_backend()


def get_backend() -> ModuleType:
    """The process-wide active backend (chosen once at import)."""
    return _active


def backend_name() -> str:
    return _active.BACKEND_NAME


def set_backend(name: str) -> ModuleType:
    """Switch the active backend (primarily for tests and benchmarks)."""
    global _active
    _active = load_backend(name)
    return _active

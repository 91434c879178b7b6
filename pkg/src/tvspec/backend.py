"""Backend selection for the hot weight-accumulation kernel.

The compiled Cython extension is used when importable; otherwise the NumPy
reference implementation.  ``TVSPEC_BACKEND`` forces the choice ("compiled"
or "python"); ``TVSPEC_THREADS`` caps the worker count of the compiled path.
"""
from __future__ import annotations

import os

from . import _accel_py
from .errors import ConfigError

try:
    from . import _accel  # type: ignore[attr-defined]
    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - build-environment dependent
    _accel = None
    HAVE_COMPILED = False

__all__ = ["HAVE_COMPILED", "get_backend", "active_backend_name", "num_threads"]


def get_backend(name: str | None = None):
    """Module implementing penalty_accumulate; ``name`` overrides the default."""
    if name is None:
        name = os.environ.get("TVSPEC_BACKEND", "auto")
    if name in ("auto", ""):
        return _accel if HAVE_COMPILED else _accel_py
    if name == "compiled":
        if not HAVE_COMPILED:
            raise ConfigError("compiled backend requested but tvspec._accel is not built")
        return _accel
    if name == "python":
        return _accel_py
    raise ConfigError(f"unknown backend {name!r} (expected auto, compiled or python)")


def active_backend_name(name: str | None = None) -> str:
    return "compiled" if get_backend(name) is _accel and _accel is not None else "python"


def num_threads() -> int:
    """Worker count: TVSPEC_THREADS if set, else machine parallelism."""
    raw = os.environ.get("TVSPEC_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"TVSPEC_THREADS must be an integer, got {raw!r}") from exc
        if n < 1:
            raise ConfigError("TVSPEC_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1

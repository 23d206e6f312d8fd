"""Selects the compiled kernels when available, else the numpy fallback.

Set ``SHEFORGE_PURE=1`` to force the fallback (useful for benchmarking and
for checking that both paths agree).
"""
import os

from . import _fallback

BACKEND = "python"
if not os.environ.get("SHEFORGE_PURE"):
    try:
        from . import _native as _impl
        BACKEND = "native"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

spwm_levels = _impl.spwm_levels
project_harmonics = _impl.project_harmonics

__all__ = ["BACKEND", "spwm_levels", "project_harmonics"]

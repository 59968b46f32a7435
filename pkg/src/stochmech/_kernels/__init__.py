"""Kernel lane selection: compiled extension when available, numpy otherwise.

Set STOCHMECH_KERNEL=compiled|fallback|auto before import to force a lane.
KERNEL_LANE records which one won so tests and benchmarks can report it.
"""

import os

from . import pyfallback

_requested = os.environ.get("STOCHMECH_KERNEL", "auto").lower()
if _requested not in ("auto", "compiled", "fallback"):
    raise ImportError(f"STOCHMECH_KERNEL must be auto, compiled or fallback, got {_requested!r}")

if _requested == "fallback":
    integrate_block = pyfallback.integrate_block
    KERNEL_LANE = "fallback"
else:
    try:
        from ._core import integrate_block
        KERNEL_LANE = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        integrate_block = pyfallback.integrate_block
        KERNEL_LANE = "fallback"

__all__ = ["integrate_block", "KERNEL_LANE", "pyfallback"]

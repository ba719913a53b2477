"""Kernel backend selection.

The hot inner loops (Walsh-Hadamard butterfly, simplex pivot update) exist
twice: a compiled Cython extension and a pure numpy fallback.  This module
picks one at import time and exposes it under a stable name.

Set ``STABCERT_KERNELS=python`` or ``STABCERT_KERNELS=compiled`` to force a
backend; the default tries the compiled extension and falls back silently.
"""

from __future__ import annotations

import os

__all__ = ["fwht_inplace", "pivot_update", "BACKEND"]

_forced = os.environ.get("STABCERT_KERNELS", "").strip().lower()
if _forced not in ("", "compiled", "python"):
    raise ImportError(
        f"STABCERT_KERNELS must be 'compiled' or 'python', got {_forced!r}"
    )

if _forced == "python":
    from stabcert._kernels_numpy import fwht_inplace, pivot_update

    BACKEND = "python"
else:
    try:
        from stabcert._native import fwht_inplace, pivot_update

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        from stabcert._kernels_numpy import fwht_inplace, pivot_update

        BACKEND = "python"

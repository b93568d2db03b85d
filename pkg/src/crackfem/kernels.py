"""Kernel backend selection.

Prefers the compiled Cython kernels and falls back to the pure-numpy
implementation when the extension is not built.  Override with the
environment variable CRACKFEM_KERNELS=python|cython (``cython`` raises if
the extension is missing instead of silently falling back).
"""

from __future__ import annotations

import os

_requested = os.environ.get("CRACKFEM_KERNELS", "auto").lower()
if _requested not in {"auto", "cython", "python"}:
    raise ValueError(
        f"CRACKFEM_KERNELS must be auto, cython or python, got {_requested!r}")

if _requested == "python":
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import _kernels_py as _impl
        BACKEND = "python"

batch_element_integrals = _impl.batch_element_integrals

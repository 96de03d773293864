"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``MULTISCALE_LATTICE_KERNELS`` to ``python`` or ``compiled`` to force a
backend (``compiled`` raises if the extension is missing).
"""

from __future__ import annotations

import os

from . import _kernels_py

_choice = os.environ.get("MULTISCALE_LATTICE_KERNELS", "auto").lower()

if _choice == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

toda_hirota_row = _impl.toda_hirota_row
hietarinta_row = _impl.hietarinta_row

__all__ = ["BACKEND", "hietarinta_row", "toda_hirota_row"]

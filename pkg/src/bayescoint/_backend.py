"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable; setting
``BAYESCOINT_PURE=1`` forces the numpy fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _fallback


def _load() -> tuple[ModuleType, str]:
    if os.environ.get("BAYESCOINT_PURE", "") not in ("", "0"):
        return _fallback, "python"
    try:
        from . import _kernels
    except ImportError:
        return _fallback, "python"
    return _kernels, "compiled"


kernels, name = _load()


def use(backend: str) -> None:
    """Switch backend at runtime (``"compiled"`` or ``"python"``)."""
    global kernels, name
    if backend == "python":
        kernels, name = _fallback, "python"
    elif backend == "compiled":
        from . import _kernels

        kernels, name = _kernels, "compiled"
    else:
        raise ValueError(f"unknown backend {backend!r}")

"""Kernel backend selection.

The compiled Cython kernels are used when the extension is importable; the
pure-Python twins are the fallback.  ``SHOTNOISE_SBD_BACKEND=python`` forces
the fallback, ``=compiled`` makes a missing extension an import error.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def _load() -> tuple[ModuleType, str]:
    wanted = os.environ.get("SHOTNOISE_SBD_BACKEND", "auto").lower()
    if wanted == "python":
        return _pykernels, "python"
    try:
        from . import _ckernels
    except ImportError:
        if wanted == "compiled":
            raise
        return _pykernels, "python"
    return _ckernels, "compiled"


kernels, BACKEND = _load()


def get_kernels(name: str | None = None) -> ModuleType:
    """Kernel module by name (``"python"`` or ``"compiled"``); default is the
    import-time selection."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def compiled_available() -> bool:
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return False
    return True

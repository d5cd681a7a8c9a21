"""Kernel backend selection.

Two interchangeable kernel sets exist: the compiled Cython module
``mixbal._kernels`` and the numpy fallback ``mixbal._kernels_py``. The
compiled one is preferred when importable; set ``MIXBAL_BACKEND=python``
or ``MIXBAL_BACKEND=cython`` to force a choice. ``use()`` switches at
runtime (the benchmark does this to compare both).

Results differ between backends only in floating-point low-order bits;
within one backend every operation is deterministic.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py


def _load_cython() -> ModuleType | None:
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels


def available() -> dict[str, ModuleType]:
    """Map of backend name to kernel module for everything importable."""
    out = {"python": _kernels_py}
    compiled = _load_cython()
    if compiled is not None:
        out["cython"] = compiled
    return out


def _initial() -> ModuleType:
    forced = os.environ.get("MIXBAL_BACKEND")
    if forced:
        mods = available()
        if forced not in mods:
            raise ImportError(
                f"MIXBAL_BACKEND={forced!r} requested but only "
                f"{sorted(mods)} available (is the extension built?)"
            )
        return mods[forced]
    compiled = _load_cython()
    return compiled if compiled is not None else _kernels_py


_active = _initial()


def use(name: str) -> None:
    """Switch the active backend; raises if the name is not available."""
    global _active
    mods = available()
    if name not in mods:
        raise ValueError(f"backend {name!r} not available, have {sorted(mods)}")
    _active = mods[name]


def kernels() -> ModuleType:
    """The active kernel module."""
    return _active


def name() -> str:
    """Name of the active backend ('cython' or 'python')."""
    return _active.NAME

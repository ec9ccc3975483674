"""Hot numerical kernels with a compiled core and a numpy fallback.

The Cython extension ``_core`` is used when it was built; otherwise, or when
``SEISDAMAGE_PURE_PYTHON`` is set to a non-empty value, the functions come
from ``_fallback``. ``BACKEND`` names the active implementation.
"""
import os

from . import _fallback

if os.environ.get("SEISDAMAGE_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback
        BACKEND = "python"
    else:
        BACKEND = "compiled"

newmark_peak_displacement = _impl.newmark_peak_displacement
smo_solve = _impl.smo_solve


def available_backends():
    """Return a mapping ``name -> module`` of every importable backend."""
    found = {"python": _fallback}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        found["compiled"] = _core
    return found


__all__ = ["BACKEND", "available_backends", "newmark_peak_displacement", "smo_solve"]

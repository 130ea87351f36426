"""Numerical hot loops.

``smo_solve`` comes from the compiled extension when it is importable and
from the numpy fallback otherwise. Setting ``AUGSCOPE_PURE_PYTHON=1`` forces
the fallback. ``BACKEND`` names the implementation in use.
"""

import os

from . import smo_fallback

if os.environ.get("AUGSCOPE_PURE_PYTHON", "") not in ("", "0"):
    _ext = None
else:
    try:
        from . import _smo as _ext
    except ImportError:
        _ext = None

if _ext is not None:
    smo_solve = _ext.smo_solve
    BACKEND = "cython"
else:
    smo_solve = smo_fallback.smo_solve
    BACKEND = "python"

LINEAR, RBF = 0, 1

__all__ = ["smo_solve", "BACKEND", "LINEAR", "RBF", "smo_fallback"]

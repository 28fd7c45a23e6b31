"""Hot kernels with a compiled backend and a pure-Python fallback.

The compiled extension is preferred; set ``IDEOSCALE_PURE_PYTHON=1`` to force
the fallback (used by the benchmark and by the backend-agreement tests).
"""

import os

from . import _dip_py

BACKEND = "python"
dip_sorted = _dip_py.dip_sorted
dip_batch = _dip_py.dip_batch

if os.environ.get("IDEOSCALE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _dip_ext
    except ImportError:
        _dip_ext = None
    if _dip_ext is not None:
        BACKEND = "cython"
        dip_sorted = _dip_ext.dip_sorted
        dip_batch = _dip_ext.dip_batch

__all__ = ["BACKEND", "dip_sorted", "dip_batch"]

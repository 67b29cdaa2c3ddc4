"""Backend selection for the propagator kernels.

The compiled extension is used when it was built; otherwise, or when
``OSCBUS_PURE_PYTHON=1`` is set, the pure-Python module is used. ``BACKEND``
names the active choice.
"""

import os

from . import _kernels_py

if os.environ.get("OSCBUS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

accumulate_batch = _impl.accumulate_batch
displacement_matrix = _impl.displacement_matrix

__all__ = ["BACKEND", "accumulate_batch", "displacement_matrix"]

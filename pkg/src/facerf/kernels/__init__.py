"""Kernel backend selection.

Set FACERF_KERNELS=numpy to force the pure-numpy path, FACERF_KERNELS=numba
to require the compiled path.  Default: numba when importable, else numpy.
``python -m facerf.kernels.bench`` times the two backends against each other.
"""

import logging
import os

from .common import HIT, MISS, OVERFLOW, SHADE_BAND, SURF_TOL

log = logging.getLogger(__name__)

_requested = os.environ.get("FACERF_KERNELS", "").strip().lower()
if _requested not in ("", "numpy", "numba"):
    raise RuntimeError(f"FACERF_KERNELS must be 'numpy' or 'numba', got {_requested!r}")

if _requested == "numpy":
    from . import numpy_impl as _impl
    BACKEND = "numpy"
else:
    try:
        from . import numba_impl as _impl
        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        from . import numpy_impl as _impl
        BACKEND = "numpy"
        log.warning("numba unavailable, falling back to numpy kernels")

sdf_points = _impl.sdf_points
trace_rays = _impl.trace_rays
field_eval = _impl.field_eval
composite_rays = _impl.composite_rays

__all__ = [
    "BACKEND",
    "HIT",
    "MISS",
    "OVERFLOW",
    "SHADE_BAND",
    "SURF_TOL",
    "composite_rays",
    "field_eval",
    "sdf_points",
    "trace_rays",
]

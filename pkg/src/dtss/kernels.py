"""Kernel selection: compiled extension when available, pure Python otherwise.

Set DTSS_PURE_PY=1 to force the pure-Python path (useful for benchmarking
and for debugging the compiled kernels against their reference).
"""

import os

if os.environ.get("DTSS_PURE_PY") == "1":
    from dtss import _pykernels as _impl
else:
    try:
        from dtss import _ext as _impl  # type: ignore[attr-defined]
    except ImportError:
        from dtss import _pykernels as _impl

IMPL = _impl.IMPL

mix64 = _impl.mix64
u01 = _impl.u01
fill_u01 = _impl.fill_u01
norm_inv = _impl.norm_inv
std_normal = _impl.std_normal
point_in_polygon = _impl.point_in_polygon
polygon_assign = _impl.polygon_assign
point_polygon_distance = _impl.point_polygon_distance
pairs_within = _impl.pairs_within
count_within = _impl.count_within
crowd_step = _impl.crowd_step
sense_step = _impl.sense_step
loiter_windows = _impl.loiter_windows

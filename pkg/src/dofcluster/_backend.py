"""Kernel backend selection.

The compiled extension (`dofcluster._kernels`, Cython) handles the hot
paths: fraction-free integer elimination on int64 with overflow detection,
and the RK4 segment runner.  When the extension is absent, or an
elimination overflows int64, or DOFCLUSTER_PURE=1 is set, the pure-Python
kernels take over.  Both backends implement identical contracts; results
agree (exactly for ranks/determinants, to rounding for trajectories).
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_FORCE_PURE = os.environ.get("DOFCLUSTER_PURE", "") == "1"


def compiled_available() -> bool:
    return _compiled is not None


def active_backend() -> str:
    """Name of the backend serving the next kernel call: 'compiled' or 'pure'."""
    if _FORCE_PURE or _compiled is None:
        return "pure"
    return "compiled"


def _to_i64(rows):
    # Raises OverflowError when an entry exceeds int64; caller falls back.
    arr = np.array(rows, dtype=np.int64)
    return np.ascontiguousarray(arr.reshape(len(rows), len(rows[0])))


def exact_rank_rows(rows) -> int:
    """Rank of an integer matrix given as a list of rows."""
    if not rows or not rows[0]:
        return 0
    if active_backend() == "compiled":
        try:
            return _compiled.bareiss_rank_i64(_to_i64(rows))
        except OverflowError:
            pass
    return _pykernels.bareiss_rank(rows)


def exact_determinant_rows(rows) -> int:
    """Determinant of a square integer matrix given as a list of rows."""
    if not rows:
        return 1
    if active_backend() == "compiled":
        try:
            return int(_compiled.bareiss_det_i64(_to_i64(rows)))
        except OverflowError:
            pass
    return _pykernels.bareiss_determinant(rows)


def run_segment(*args, **kwargs):
    """Dispatch the RK4 segment runner (see `_pykernels.run_segment`)."""
    if active_backend() == "compiled":
        return _compiled.run_segment(*args, **kwargs)
    return _pykernels.run_segment(*args, **kwargs)

"""Backend selection for the hot kernels.

The compiled extension is preferred when importable; the pure-NumPy fallback
is always available. Both produce bit-identical results, so the choice only
affects speed. Set HOPSYNC_BACKEND=py or HOPSYNC_BACKEND=cy to force one.
"""
from __future__ import annotations

import os

_forced = os.environ.get("HOPSYNC_BACKEND", "").strip().lower()

if _forced == "py":
    from . import _kernels_py as _impl
    BACKEND = "python"
elif _forced == "cy":
    from . import _kernels_cy as _impl  # ImportError here means no extension was built
    BACKEND = "cython"
elif _forced:
    raise ValueError(f"HOPSYNC_BACKEND must be 'py' or 'cy', not {_forced!r}")
else:
    try:
        from . import _kernels_cy as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

run_rounds = _impl.run_rounds
filter_series = _impl.filter_series

"""Backend selection for the hot kernels.

The compiled extension is used when importable; setting ``ROBUSTNN_PURE=1``
forces the pure-Python fallback.
"""
import os

from . import _fallback

if os.environ.get("ROBUSTNN_PURE", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "compiled" if _impl is not _fallback else "python"

sq_distances = _impl.sq_distances
scan_k_nearest = _impl.scan_k_nearest
hopcroft_karp = _impl.hopcroft_karp
alternating_reach = _impl.alternating_reach

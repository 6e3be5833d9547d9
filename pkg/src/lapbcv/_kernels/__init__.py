"""Kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the
pure-numpy fallback takes over with identical contracts.  Set
``LAPBCV_FORCE_FALLBACK=1`` to force the numpy path (used by the kernel
benchmark and the backend-equivalence tests).
"""
import os

from . import _fallback

if os.environ.get("LAPBCV_FORCE_FALLBACK") == "1":
    _impl = _fallback
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
residual_dd = _impl.residual_dd
bcv_loss_quadrants = _impl.bcv_loss_quadrants


def backends():
    """All importable backends, for benchmarks and cross-checks."""
    out = {"numpy": _fallback}
    try:
        from . import _core
        out["compiled"] = _core
    except ImportError:
        pass
    return out

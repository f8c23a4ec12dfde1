"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable; otherwise, or
when ``EDGEOFFLOAD_PURE`` is set to a non-empty value other than ``0``, the
NumPy fallback in ``_purepy`` is used. Both expose the same functions.
"""
import os

from . import _purepy

BACKEND = "python"
_impl = _purepy

if os.environ.get("EDGEOFFLOAD_PURE", "") in ("", "0"):
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _purepy

max_admissible_rate = _impl.max_admissible_rate
admissible_rates = _impl.admissible_rates
waterfill = _impl.waterfill
response_time = _impl.response_time
best_response_sweep = _impl.best_response_sweep


def compiled():
    """Return the compiled module or ``None`` if it was not built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels

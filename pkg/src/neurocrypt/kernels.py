"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise the numpy
fallback. Set ``NEUROCRYPT_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os

from neurocrypt import _fallback

if os.environ.get("NEUROCRYPT_PURE", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from neurocrypt import _kernels as _impl
    except ImportError:
        _impl = _fallback

BACKEND = "numpy" if _impl is _fallback else "cython"

des_encrypt = _impl.des_encrypt
nibble_filter = _impl.nibble_filter
lfsr_step = _impl.lfsr_step


def backends() -> dict:
    """All importable backends by name, for benchmarks and cross-checks."""
    found = {"numpy": _fallback}
    try:
        from neurocrypt import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found

"""Thinning kernel backends.

The compiled Cython kernel is preferred; the pure Python implementation
is selected when the extension is missing or when ``AIRTREE_KERNELS``
is set to ``python``.  Both produce bit-identical skeletons.
"""

from __future__ import annotations

import os

from . import pure

_forced = os.environ.get("AIRTREE_KERNELS", "").strip().lower()

if _forced == "python":
    _impl = pure
    BACKEND = "python"
else:
    try:
        from . import _thin as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise
        _impl = pure
        BACKEND = "python"


def thin_inplace(flat, sx: int, sy: int, sz: int) -> int:
    return _impl.thin_inplace(flat, sx, sy, sz)

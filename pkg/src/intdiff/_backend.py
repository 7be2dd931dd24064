"""Select the compiled core or the pure-Python fallback at import time.

Set ``INTDIFF_BACKEND=python`` to force the fallback.
"""

import os

from . import _fallback

fallback = _fallback

if os.environ.get("INTDIFF_BACKEND", "").lower() == "python":
    _impl = _fallback
    NAME = "python"
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback
        NAME = "python"
    else:
        NAME = "compiled"

euler_affine = _impl.euler_affine
nw_sums = _impl.nw_sums


def compiled():
    """The compiled module, or None when it was not built."""
    try:
        from . import _core
    except ImportError:
        return None
    return _core

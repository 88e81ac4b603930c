"""Hot numeric kernels: compiled extension when built, NumPy fallback otherwise.

Set ``VENUETRACE_KERNELS=pure`` to force the fallback (used by the benchmark
and when the extension is unavailable).
"""

import os

from venuetrace.kernels import pure

if os.environ.get("VENUETRACE_KERNELS") == "pure":
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from venuetrace.kernels import _native as _impl

        BACKEND = "native"
    except ImportError:
        _impl = pure
        BACKEND = "pure"

logreg_fit = _impl.logreg_fit
logreg_margins = _impl.logreg_margins
logreg_predict = _impl.logreg_predict

__all__ = ["BACKEND", "logreg_fit", "logreg_margins", "logreg_predict", "pure"]

"""Layer kernels with backend selection at import time.

The compiled extension is preferred when present; set ANTISPOOF_KERNELS to
"numpy" or "native" to force a backend. ``numpy_ops`` and ``native_ops``
stay importable individually for benchmarking and tests.
"""

import os

from . import numpy_ops

try:
    from . import native_ops
    _HAVE_NATIVE = True
except ImportError:
    native_ops = None
    _HAVE_NATIVE = False


def native_available():
    return _HAVE_NATIVE


_requested = os.environ.get("ANTISPOOF_KERNELS", "auto")
if _requested == "native" and not _HAVE_NATIVE:
    raise ImportError("ANTISPOOF_KERNELS=native but the compiled extension is missing")
if _requested in ("auto", "native") and _HAVE_NATIVE:
    _impl = native_ops
    BACKEND = "native"
else:
    _impl = numpy_ops
    BACKEND = "numpy"

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward
lrn_forward = _impl.lrn_forward
lrn_backward = _impl.lrn_backward
fc_forward = _impl.fc_forward
fc_backward = _impl.fc_backward

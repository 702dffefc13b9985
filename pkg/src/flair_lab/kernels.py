"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the numpy
fallback is used. Set ``FLAIR_LAB_PURE=1`` to force the fallback.
"""
import os

import numpy as np

from flair_lab import _kernels_py

if os.environ.get("FLAIR_LAB_PURE", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from flair_lab import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def mixture_moments(x, t, log_weights, means, variances):
    return _impl.mixture_moments(
        np.ascontiguousarray(x, dtype=np.float64),
        float(t),
        np.ascontiguousarray(log_weights, dtype=np.float64),
        np.ascontiguousarray(means, dtype=np.float64),
        np.ascontiguousarray(variances, dtype=np.float64),
    )


def circular_convolve_rows(x, kernel):
    return _impl.circular_convolve_rows(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(kernel, dtype=np.float64),
    )

"""Patch-extraction kernels with import-time backend selection.

The compiled Cython extension is used when available; otherwise (or when
``SKIPLAB_PURE_PYTHON=1``) the numpy fallback takes over.  Both backends
share one layout: ``im2col`` yields a ``(C*kh*kw, B*Ho*Wo)`` float64 matrix.

A small shape-keyed buffer pool backs the large intermediates; steady-state
training steps then run without fresh large allocations (page faults on
100+ MB column matrices otherwise dominate the step time).
"""

import os

import numpy as np

from . import pykernels

_impl = None
if os.environ.get("SKIPLAB_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _cykernels as _impl
    except ImportError:
        _impl = None

HAVE_EXT = _impl is not None
BACKEND = "cython" if HAVE_EXT else "python"
if _impl is None:
    _impl = pykernels

_POOL = {}
_MAX_PER_SHAPE = 4
_MIN_POOL_BYTES = 1 << 20


def take_buffer(shape):
    """Borrow a float64 scratch array (contents undefined)."""
    key = tuple(shape)
    lst = _POOL.get(key)
    if lst:
        return lst.pop()
    return np.empty(shape, dtype=np.float64)


def release_buffer(arr):
    """Return a borrowed array to the pool (small ones are just dropped)."""
    if arr is None or arr.nbytes < _MIN_POOL_BYTES or not arr.flags.c_contiguous:
        return
    lst = _POOL.setdefault(arr.shape, [])
    if len(lst) < _MAX_PER_SHAPE:
        lst.append(arr)


def clear_buffers():
    _POOL.clear()


def conv_out_hw(h, w, k, stride, pad):
    return (h + 2 * pad - k) // stride + 1, (w + 2 * pad - k) // stride + 1


def im2col(x, kh, kw, stride, pad, pooled=False):
    """Unfold NCHW input into convolution columns of shape (C*kh*kw, B*Ho*Wo).

    With ``pooled=True`` the result is pool-backed; the caller must hand it
    back via release_buffer when done.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    B, C, H, W = x.shape
    Ho, Wo = conv_out_hw(H, W, kh, stride, pad)
    shape = (C * kh * kw, B * Ho * Wo)
    out = take_buffer(shape) if pooled else np.empty(shape, dtype=np.float64)
    _impl.im2col(x, kh, kw, stride, pad, out)
    return out


def col2im(cols, x_shape, kh, kw, stride, pad):
    """Scatter-add columns back to an NCHW gradient array (inverse of im2col)."""
    cols = np.ascontiguousarray(cols, dtype=np.float64)
    gx = np.zeros(x_shape, dtype=np.float64)
    _impl.col2im(cols, gx, kh, kw, stride, pad)
    return gx

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: patch extraction/scatter for strided 2-d convolution.

Layout contract (shared with the pure-Python fallback): columns are
(C*kh*kw, B*Ho*Wo) so a convolution is a single GEMM against the
(out_channels, C*kh*kw) weight matrix.  Padding is implicit: out-of-bounds
taps read as zero on the way out and are discarded on the way back.  Inner
loops are split into pad/interior segments so the stride-1 interior copy
vectorizes.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _imax(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a > b else b


cdef inline Py_ssize_t _imin(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a < b else b


def im2col(double[:, :, :, ::1] x, int kh, int kw, int stride, int pad,
           double[:, ::1] out):
    cdef Py_ssize_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t Ho = (H + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - kw) // stride + 1
    cdef Py_ssize_t N = Ho * Wo
    cdef Py_ssize_t b, c, ki, kj, oh, ow, row, col0, ih, base, lo, hi
    cdef const double* src
    cdef double* dst
    with nogil:
        for b in range(B):
            for c in range(C):
                for ki in range(kh):
                    for kj in range(kw):
                        row = (c * kh + ki) * kw + kj
                        base = kj - pad
                        # in-bounds ow range: 0 <= ow*stride + base < W
                        lo = _imax(0, (-base + stride - 1) // stride)
                        hi = _imin(Wo, (W - 1 - base) // stride + 1)
                        for oh in range(Ho):
                            ih = oh * stride + ki - pad
                            col0 = b * N + oh * Wo
                            dst = &out[row, col0]
                            if ih < 0 or ih >= H:
                                for ow in range(Wo):
                                    dst[ow] = 0.0
                                continue
                            src = &x[b, c, ih, 0]
                            for ow in range(0, lo):
                                dst[ow] = 0.0
                            if stride == 1:
                                for ow in range(lo, hi):
                                    dst[ow] = src[base + ow]
                            else:
                                for ow in range(lo, hi):
                                    dst[ow] = src[ow * stride + base]
                            for ow in range(hi, Wo):
                                dst[ow] = 0.0


def col2im(double[:, ::1] cols, double[:, :, :, ::1] gx, int kh, int kw,
           int stride, int pad):
    """Accumulate columns back into gx (caller supplies a zeroed array)."""
    cdef Py_ssize_t B = gx.shape[0], C = gx.shape[1], H = gx.shape[2], W = gx.shape[3]
    cdef Py_ssize_t Ho = (H + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - kw) // stride + 1
    cdef Py_ssize_t N = Ho * Wo
    cdef Py_ssize_t b, c, ki, kj, oh, ow, row, col0, ih, base, lo, hi
    cdef const double* src
    cdef double* dst
    with nogil:
        for b in range(B):
            for c in range(C):
                for ki in range(kh):
                    for kj in range(kw):
                        row = (c * kh + ki) * kw + kj
                        base = kj - pad
                        lo = _imax(0, (-base + stride - 1) // stride)
                        hi = _imin(Wo, (W - 1 - base) // stride + 1)
                        for oh in range(Ho):
                            ih = oh * stride + ki - pad
                            if ih < 0 or ih >= H:
                                continue
                            col0 = b * N + oh * Wo
                            src = &cols[row, col0]
                            dst = &gx[b, c, ih, 0]
                            if stride == 1:
                                for ow in range(lo, hi):
                                    dst[base + ow] += src[ow]
                            else:
                                for ow in range(lo, hi):
                                    dst[ow * stride + base] += src[ow]

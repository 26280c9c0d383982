"""Pure-numpy fallback for the compiled patch kernels.

Same layout contract as the extension: (C*kh*kw, B*Ho*Wo) columns.
"""

import numpy as np


def im2col(x, kh, kw, stride, pad, out):
    B, C, H, W = x.shape
    Ho = (H + 2 * pad - kh) // stride + 1
    Wo = (W + 2 * pad - kw) // stride + 1
    if pad > 0:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    sb, sc, sh, sw = x.strides
    patches = np.lib.stride_tricks.as_strided(
        x,
        shape=(B, C, kh, kw, Ho, Wo),
        strides=(sb, sc, sh, sw, stride * sh, stride * sw),
        writeable=False,
    )
    # (C, kh, kw, B, Ho, Wo) -> (CKK, B*N)
    np.copyto(out, patches.transpose(1, 2, 3, 0, 4, 5).reshape(C * kh * kw, B * Ho * Wo))


def col2im(cols, gx, kh, kw, stride, pad):
    B, C, H, W = gx.shape
    Ho = (H + 2 * pad - kh) // stride + 1
    Wo = (W + 2 * pad - kw) // stride + 1
    Hp, Wp = H + 2 * pad, W + 2 * pad
    if pad > 0:
        gp = np.zeros((B, C, Hp, Wp), dtype=gx.dtype)
    else:
        gp = gx
    cols6 = cols.reshape(C, kh, kw, B, Ho, Wo).transpose(3, 0, 1, 2, 4, 5)
    for ki in range(kh):
        for kj in range(kw):
            gp[:, :, ki : ki + stride * Ho : stride, kj : kj + stride * Wo : stride] += cols6[
                :, :, ki, kj
            ]
    if pad > 0:
        gx += gp[:, :, pad : pad + H, pad : pad + W]

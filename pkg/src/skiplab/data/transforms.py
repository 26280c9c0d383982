"""Training augmentation and analysis-time rescaling."""

import numpy as np

from ..errors import ConfigurationError

AUGMENT_PAD = 4


def augment_train(batch, rng, pad=AUGMENT_PAD):
    """Mirror/shift augmentation, one image at a time.

    Per image the rng is consumed in a fixed order: one uniform draw for the
    horizontal flip (flip when draw >= 0.5, so a draw < 0.5 plus the centered
    crop offset (pad, pad) is the identity), then two integer draws for the
    crop offset into the zero-padded image.
    """
    batch = np.asarray(batch, dtype=np.float64)
    b, c, h, w = batch.shape
    if h != w:
        raise ConfigurationError(f"augment_train expects square images, got {h}x{w}")
    out = np.empty_like(batch)
    padded = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=np.float64)
    for i in range(b):
        img = batch[i]
        if rng.random() >= 0.5:
            img = img[:, :, ::-1]
        padded[:] = 0.0
        padded[:, pad : pad + h, pad : pad + w] = img
        oy = int(rng.integers(0, 2 * pad + 1))
        ox = int(rng.integers(0, 2 * pad + 1))
        out[i] = padded[:, oy : oy + h, ox : ox + w]
    return out


def resize_scale(batch, scale):
    """Bilinear rescale (half-pixel centers, clamped edges).

    Output dims are round-half-up of scale * input dims.  Identity at
    scale 1.0; constant images stay constant.
    """
    batch = np.asarray(batch, dtype=np.float64)
    b, c, h, w = batch.shape
    oh = int(np.floor(scale * h + 0.5))
    ow = int(np.floor(scale * w + 0.5))
    if oh < 1 or ow < 1:
        raise ConfigurationError(f"scale {scale} collapses {h}x{w} input")
    if oh == h and ow == w:
        return batch.copy()
    ys = (np.arange(oh) + 0.5) * (h / oh) - 0.5
    xs = (np.arange(ow) + 0.5) * (w / ow) - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)
    wx = np.clip(xs - x0, 0.0, 1.0)

    top = batch[:, :, y0][:, :, :, x0] * (1 - wx) + batch[:, :, y0][:, :, :, x1] * wx
    bot = batch[:, :, y1][:, :, :, x0] * (1 - wx) + batch[:, :, y1][:, :, :, x1] * wx
    return top * (1 - wy)[None, None, :, None] + bot * wy[None, None, :, None]

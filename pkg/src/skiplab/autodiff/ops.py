"""Differentiable operations on Tensors.

Every op computes forward with numpy and registers a backward closure on the
active tape.  Gradients accumulate additively, so a tensor used twice
receives the sum of both path gradients.
"""

import numpy as np

from ..errors import ConfigurationError
from .tensor import Tensor, record_op


def _unbroadcast(g, shape):
    """Sum gradient g down to `shape` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _check_nonempty(x, name):
    if x.data.size == 0:
        raise ConfigurationError(f"{name}: empty tensor")


# ---------------------------------------------------------------------------
# elementwise
# ---------------------------------------------------------------------------

def relu(x):
    _check_nonempty(x, "relu")
    out = Tensor(np.maximum(x.data, 0.0))
    mask = x.data > 0

    def bwd(g):
        x.accumulate_grad_owned(g * mask)

    record_op([x], [out], bwd)
    return out


def sigmoid(x):
    _check_nonempty(x, "sigmoid")
    # Split by sign for stability at large |x|.
    d = x.data
    s = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))),
                 np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))
    out = Tensor(s)

    def bwd(g):
        x.accumulate_grad_owned(g * s * (1.0 - s))

    record_op([x], [out], bwd)
    return out


def tanh(x):
    _check_nonempty(x, "tanh")
    t = np.tanh(x.data)
    out = Tensor(t)

    def bwd(g):
        x.accumulate_grad_owned(g * (1.0 - t * t))

    record_op([x], [out], bwd)
    return out


def log(x):
    out = Tensor(np.log(x.data))

    def bwd(g):
        x.accumulate_grad_owned(g / x.data)

    record_op([x], [out], bwd)
    return out


def clip(x, lo, hi):
    """Clamp values; gradient passes only where no clamping occurred."""
    out = Tensor(np.clip(x.data, lo, hi))
    inside = (x.data > lo) & (x.data < hi)

    def bwd(g):
        x.accumulate_grad_owned(g * inside)

    record_op([x], [out], bwd)
    return out


def add(a, b):
    out = Tensor(a.data + b.data)

    def bwd(g):
        if a is not b and a.data.shape == g.shape and b.data.shape == g.shape:
            # g is the output's final accumulated grad; the sweep never touches
            # it again, so one side may alias it and skip a copy.
            a.accumulate_grad_owned(g)
            b.accumulate_grad(g)
        else:
            a.accumulate_grad(_unbroadcast(g, a.data.shape))
            b.accumulate_grad(_unbroadcast(g, b.data.shape))

    record_op([a, b], [out], bwd)
    return out


def mul(a, b):
    out = Tensor(a.data * b.data)

    def bwd(g):
        a.accumulate_grad_owned(_unbroadcast(g * b.data, a.data.shape))
        b.accumulate_grad_owned(_unbroadcast(g * a.data, b.data.shape))

    record_op([a, b], [out], bwd)
    return out


def scalar_mul(x, c):
    out = Tensor(x.data * c)

    def bwd(g):
        x.accumulate_grad(g * c)

    record_op([x], [out], bwd)
    return out


def scalar_add(x, c):
    out = Tensor(x.data + c)

    def bwd(g):
        x.accumulate_grad(g)

    record_op([x], [out], bwd)
    return out


def reshape(x, shape):
    out = Tensor(x.data.reshape(shape))

    def bwd(g):
        x.accumulate_grad(g.reshape(x.data.shape))

    record_op([x], [out], bwd)
    return out


def pad_channels(x, channels):
    """Zero-pad NCHW input along the channel axis up to `channels`."""
    b, c, h, w = x.data.shape
    if channels < c:
        raise ConfigurationError(f"pad_channels: target {channels} < input {c}")
    data = np.zeros((b, channels, h, w), dtype=np.float64)
    data[:, :c] = x.data
    out = Tensor(data)

    def bwd(g):
        x.accumulate_grad(g[:, :c])

    record_op([x], [out], bwd)
    return out


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def tsum(x):
    out = Tensor(np.array(x.data.sum()))

    def bwd(g):
        x.accumulate_grad(np.broadcast_to(g, x.data.shape))

    record_op([x], [out], bwd)
    return out


def mean(x):
    n = x.data.size
    out = Tensor(np.array(x.data.sum() / n))

    def bwd(g):
        x.accumulate_grad(np.broadcast_to(g / n, x.data.shape))

    record_op([x], [out], bwd)
    return out


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------

def _pool_check(x, k, s, name):
    _check_nonempty(x, name)
    if x.data.ndim != 4:
        raise ConfigurationError(f"{name}: expected NCHW input, got {x.data.shape}")
    if k != s:
        raise ConfigurationError(f"{name}: only window == stride supported (k={k}, s={s})")
    b, c, h, w = x.data.shape
    if h % k or w % k:
        raise ConfigurationError(
            f"{name}: spatial dims ({h}, {w}) not divisible by window {k}"
        )


def max_pool2d(x, k=2, s=2):
    """Window max; gradient routed to the first max position in row-major
    window order (deterministic tie-break)."""
    _pool_check(x, k, s, "max_pool2d")
    b, c, h, w = x.data.shape
    ho, wo = h // k, w // k
    windows = (
        x.data.reshape(b, c, ho, k, wo, k)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(b, c, ho, wo, k * k)
    )
    arg = windows.argmax(axis=-1)
    out = Tensor(np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0])

    def bwd(g):
        gw = np.zeros((b, c, ho, wo, k * k), dtype=np.float64)
        np.put_along_axis(gw, arg[..., None], g[..., None], axis=-1)
        gx = (
            gw.reshape(b, c, ho, wo, k, k)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(b, c, h, w)
        )
        x.accumulate_grad_owned(gx)

    record_op([x], [out], bwd)
    return out


def avg_pool2d(x, k=2, s=2):
    _pool_check(x, k, s, "avg_pool2d")
    b, c, h, w = x.data.shape
    ho, wo = h // k, w // k
    out = Tensor(x.data.reshape(b, c, ho, k, wo, k).mean(axis=(3, 5)))

    def bwd(g):
        gx = np.repeat(np.repeat(g, k, axis=2), k, axis=3) / (k * k)
        x.accumulate_grad_owned(gx)

    record_op([x], [out], bwd)
    return out


def global_avg_pool(x):
    """Spatial mean of an NCHW tensor -> (N, C)."""
    _check_nonempty(x, "global_avg_pool")
    b, c, h, w = x.data.shape
    out = Tensor(x.data.mean(axis=(2, 3)))

    def bwd(g):
        x.accumulate_grad(np.broadcast_to(g[:, :, None, None] / (h * w), x.data.shape))

    record_op([x], [out], bwd)
    return out


# ---------------------------------------------------------------------------
# linear
# ---------------------------------------------------------------------------

def linear(x, w, b):
    """Affine map: (N, D) @ (D, K) + (K,)."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ConfigurationError(
            f"linear: inner dims disagree, input {x.data.shape} vs weight {w.data.shape}"
        )
    if b.data.shape != (w.data.shape[1],):
        raise ConfigurationError(
            f"linear: bias shape {b.data.shape} != ({w.data.shape[1]},)"
        )
    out = Tensor(x.data @ w.data + b.data)

    def bwd(g):
        x.accumulate_grad_owned(g @ w.data.T)
        w.accumulate_grad_owned(x.data.T @ g)
        b.accumulate_grad_owned(g.sum(axis=0))

    record_op([x, w, b], [out], bwd)
    return out


# ---------------------------------------------------------------------------
# gate combination (x_next = g*F(x) + (1-g)*x with shape-matched skip path)
# ---------------------------------------------------------------------------

def soft_gate_blend(fx, sx, s):
    """Continuous relaxation: s*F(x) + (1-s)*skip(x), s per sample (N, 1)."""
    s4 = s.data.reshape(-1, 1, 1, 1)
    out = Tensor(s4 * fx.data + (1.0 - s4) * sx.data)

    def bwd(g):
        fx.accumulate_grad_owned(g * s4)
        sx.accumulate_grad_owned(g * (1.0 - s4))
        ds = (g * (fx.data - sx.data)).sum(axis=(1, 2, 3)).reshape(s.data.shape)
        s.accumulate_grad_owned(ds)

    record_op([fx, sx, s], [out], bwd)
    return out


def hard_gate_blend(fx, sx, s, g_dec, straight_through):
    """Hard selection per sample by binary decisions ``g_dec``.

    Forward picks rows exactly (no arithmetic mixing, so g=1 reproduces F(x)
    bitwise and g=0 the skip path).  Backward routes the output gradient to
    the taken branch only; with ``straight_through`` the gate probability
    also receives the gradient it would get from the soft blend with its
    value replaced by the hard decision.
    """
    gcol = np.asarray(g_dec, dtype=np.float64).reshape(-1)
    take = gcol.astype(bool)
    if take.all():
        data = fx.data.copy()
    elif not take.any():
        data = sx.data.copy()
    else:
        data = np.where(take[:, None, None, None], fx.data, sx.data)
    out = Tensor(data)

    def bwd(g):
        if take.all():
            fx.accumulate_grad(g)
        elif not take.any():
            sx.accumulate_grad(g)
        else:
            g4 = gcol[:, None, None, None]
            fx.accumulate_grad_owned(g * g4)
            sx.accumulate_grad_owned(g * (1.0 - g4))
        if straight_through and s is not None:
            ds = (g * (fx.data - sx.data)).sum(axis=(1, 2, 3)).reshape(s.data.shape)
            s.accumulate_grad_owned(ds)

    inputs = [fx, sx] if (not straight_through or s is None) else [fx, sx, s]
    record_op(inputs, [out], bwd)
    return out

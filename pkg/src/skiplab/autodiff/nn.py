"""Stateful/fused network ops: batch norm, LSTM cell, cross-entropy."""

import numpy as np

from ..errors import ConfigurationError, DataError
from .tensor import Tensor, record_op

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


class BNState:
    """Running statistics for one batch-norm layer (per-channel)."""

    def __init__(self, channels):
        self.running_mean = np.zeros(channels, dtype=np.float64)
        self.running_var = np.ones(channels, dtype=np.float64)


def batch_norm2d(x, gamma, beta, state, training):
    """Per-channel normalization of NCHW input.

    Training mode normalizes with batch statistics (biased variance) and
    folds them into the running estimates; eval mode uses the running
    estimates only, making each sample's output independent of the batch.
    """
    if x.data.ndim != 4:
        raise ConfigurationError(f"batch_norm2d: expected NCHW, got {x.data.shape}")
    b, c, h, w = x.data.shape
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ConfigurationError(
            f"batch_norm2d: gamma/beta must be ({c},), got {gamma.data.shape}/{beta.data.shape}"
        )
    m = b * h * w
    if training:
        if m < 2:
            raise ConfigurationError(
                f"batch_norm2d: train mode needs N*H*W >= 2, got {m}"
            )
        mu = x.data.mean(axis=(0, 2, 3))
        var = x.data.var(axis=(0, 2, 3))
        state.running_mean += BN_MOMENTUM * (mu - state.running_mean)
        state.running_var += BN_MOMENTUM * (var - state.running_var)
    else:
        mu = state.running_mean
        var = state.running_var

    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = x.data - mu[None, :, None, None]
    xhat *= inv_std[None, :, None, None]
    out = Tensor(gamma.data[None, :, None, None] * xhat + beta.data[None, :, None, None])

    def bwd(g):
        gamma.accumulate_grad_owned((g * xhat).sum(axis=(0, 2, 3)))
        beta.accumulate_grad_owned(g.sum(axis=(0, 2, 3)))
        if not x.requires_grad:
            return
        gs = gamma.data[None, :, None, None] * inv_std[None, :, None, None]
        if training:
            gm = g.mean(axis=(0, 2, 3))[None, :, None, None]
            gxm = (g * xhat).mean(axis=(0, 2, 3))[None, :, None, None]
            x.accumulate_grad_owned(gs * (g - gm - xhat * gxm))
        else:
            x.accumulate_grad_owned(gs * g)

    record_op([x, gamma, beta], [out], bwd)
    return out


def lstm_cell(x, h, c, wx, wh, b):
    """One LSTM step.

    Pre-activations are packed as [input, forget, candidate, output] gates:
    wx is (D, 4H), wh is (H, 4H), b is (4H,).  Returns (h', c').
    """
    n, d = x.data.shape
    hid = h.data.shape[1]
    if wx.data.shape != (d, 4 * hid) or wh.data.shape != (hid, 4 * hid) or b.data.shape != (4 * hid,):
        raise ConfigurationError(
            f"lstm_cell: parameter shapes {wx.data.shape}/{wh.data.shape}/{b.data.shape} "
            f"do not match input {d}, hidden {hid}"
        )
    if c.data.shape != h.data.shape:
        raise ConfigurationError("lstm_cell: h and c must have the same shape")

    a = x.data @ wx.data + h.data @ wh.data + b.data
    ai, af, ag, ao = np.split(a, 4, axis=1)
    gi = 1.0 / (1.0 + np.exp(-ai))
    gf = 1.0 / (1.0 + np.exp(-af))
    gg = np.tanh(ag)
    go = 1.0 / (1.0 + np.exp(-ao))
    c_new = gf * c.data + gi * gg
    tc = np.tanh(c_new)
    h_new = go * tc

    h_out = Tensor(h_new)
    c_out = Tensor(c_new)

    def bwd(gh, gc):
        d_o = gh * tc
        d_c = gc + gh * go * (1.0 - tc * tc)
        d_f = d_c * c.data
        d_i = d_c * gg
        d_g = d_c * gi
        da = np.concatenate(
            [
                d_i * gi * (1.0 - gi),
                d_f * gf * (1.0 - gf),
                d_g * (1.0 - gg * gg),
                d_o * go * (1.0 - go),
            ],
            axis=1,
        )
        x.accumulate_grad_owned(da @ wx.data.T)
        h.accumulate_grad_owned(da @ wh.data.T)
        c.accumulate_grad_owned(d_c * gf)
        wx.accumulate_grad_owned(x.data.T @ da)
        wh.accumulate_grad_owned(h.data.T @ da)
        b.accumulate_grad_owned(da.sum(axis=0))

    record_op([x, h, c, wx, wh, b], [h_out, c_out], bwd)
    return h_out, c_out


def softmax_cross_entropy(logits, labels):
    """Per-sample cross-entropy of integer labels against row softmax.

    Returns the (N,) loss vector; reduce with ops.mean for the batch mean,
    whose backward is (softmax - onehot) / N.
    """
    n, k = logits.data.shape
    labels = np.asarray(labels)
    bad = (labels < 0) | (labels >= k)
    if bad.any():
        idx = int(np.argmax(bad))
        raise DataError(
            f"label {labels[idx]} out of range [0, {k}) at sample index {idx}"
        )
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    losses = -(shifted[np.arange(n), labels] - np.log(exp.sum(axis=1)))
    out = Tensor(losses)

    def bwd(g):
        gl = probs.copy()
        gl[np.arange(n), labels] -= 1.0
        logits.accumulate_grad_owned(gl * g[:, None])

    record_op([logits], [out], bwd)
    return out

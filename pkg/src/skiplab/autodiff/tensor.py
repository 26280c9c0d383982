"""Reverse-mode autodiff substrate: dense float64 tensors and a gradient tape.

A forward pass runs inside a ``Tape`` context; every differentiable op
appends one record (output refs + backward closure).  ``Tape.backward``
walks the records in exact reverse creation order, executing each backward
closure at most once and accumulating gradients additively into inputs.
Outside any tape, ops run forward-only with no bookkeeping.
"""

import numpy as np

from ..errors import ConfigurationError


class Tensor:
    """Dense n-dimensional float64 array with an optional gradient."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad=False):
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g):
        """Add a (possibly shared/broadcast) gradient contribution."""
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
            if self.grad.shape != self.data.shape:
                self.grad = np.broadcast_to(self.grad, self.data.shape).copy()
        else:
            self.grad += g

    def accumulate_grad_owned(self, g):
        """Like accumulate_grad, but takes ownership of ``g``.

        Only for freshly-allocated arrays of exactly this tensor's shape that
        the caller will never touch again (skips the defensive copy).
        """
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = g
        else:
            self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # Small operator surface; the heavy lifting lives in ops.py.
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        from . import ops

        if isinstance(other, Tensor):
            return ops.mul(self, other)
        return ops.scalar_mul(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops

        return ops.scalar_mul(self, -1.0)

    def __sub__(self, other):
        from . import ops

        if isinstance(other, Tensor):
            return ops.add(self, ops.scalar_mul(other, -1.0))
        return ops.scalar_add(self, -float(other))

    def __rsub__(self, other):
        from . import ops

        return ops.scalar_add(ops.scalar_mul(self, -1.0), float(other))


class _Record:
    __slots__ = ("outputs", "backward_fn")

    def __init__(self, outputs, backward_fn):
        self.outputs = outputs
        self.backward_fn = backward_fn


_ACTIVE_TAPES = []


class Tape:
    """Ordered record of one forward pass, replayed in reverse by backward()."""

    def __init__(self):
        self._records = []

    def __enter__(self):
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc):
        popped = _ACTIVE_TAPES.pop()
        assert popped is self
        return False

    def __len__(self):
        return len(self._records)

    def record(self, outputs, backward_fn):
        self._records.append(_Record(outputs, backward_fn))

    def backward(self, loss):
        """Seed d(loss)/d(loss) = 1 and sweep the tape once, back to front."""
        if loss.data.size != 1:
            raise ConfigurationError(
                f"backward() needs a scalar loss, got shape {loss.data.shape}"
            )
        loss.grad = np.ones_like(loss.data)
        for rec in reversed(self._records):
            grads = [o.grad for o in rec.outputs]
            if all(g is None for g in grads):
                continue
            grads = [
                g if g is not None else np.zeros_like(o.data)
                for g, o in zip(grads, rec.outputs)
            ]
            rec.backward_fn(*grads)


def active_tape():
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def record_op(inputs, outputs, backward_fn):
    """Register a backward closure if a tape is active and any input needs grad."""
    tape = active_tape()
    if tape is None:
        return
    if not any(t.requires_grad for t in inputs if isinstance(t, Tensor)):
        return
    for out in outputs:
        out.requires_grad = True
    tape.record(outputs, backward_fn)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))

"""Named parameter collection and SGD with momentum."""

import numpy as np

from ..errors import ConfigurationError, InternalError
from .tensor import Tensor


class ParameterSet:
    """Ordered, uniquely-named trainable tensors with momentum buffers."""

    def __init__(self):
        self._params = {}
        self._momentum = {}

    def add(self, name, data):
        if name in self._params:
            raise ConfigurationError(f"duplicate parameter name: {name}")
        t = Tensor(data, requires_grad=True)
        self._params[name] = t
        self._momentum[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def momentum_buffer(self, name):
        return self._momentum[name]

    def zero_grad(self):
        for p in self._params.values():
            p.grad = None

    def fill_missing_grads(self):
        """Zero-fill gradients of parameters untouched by the last backward.

        A block skipped by every sample in a batch contributes no gradient at
        all; the optimizer still expects a (zero) entry for it.
        """
        for p in self._params.values():
            if p.grad is None:
                p.grad = np.zeros_like(p.data)

    def grads(self):
        """Snapshot current gradients (zeros where absent)."""
        return {
            k: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
            for k, p in self._params.items()
        }

    def copy_values(self):
        return {k: p.data.copy() for k, p in self._params.items()}

    def load_values(self, values):
        for k, v in values.items():
            if k not in self._params:
                raise ConfigurationError(f"unknown parameter: {k}")
            if self._params[k].data.shape != v.shape:
                raise ConfigurationError(
                    f"shape mismatch for {k}: {self._params[k].data.shape} vs {v.shape}"
                )
            self._params[k].data[...] = v


def sgd_step(params, lr, momentum=0.0, weight_decay=0.0, only=None):
    """v <- momentum*v + grad + wd*param; param <- param - lr*v; grads cleared.

    ``only`` optionally restricts the update to a predicate over names
    (e.g. gate-only refinement); other parameters keep their gradients
    cleared as well so the step leaves a clean slate.
    """
    for name, p in params.items():
        if only is not None and not only(name):
            p.grad = None
            continue
        if p.grad is None:
            raise InternalError(
                f"sgd_step: parameter {name} has no gradient (broken graph?)"
            )
        v = params.momentum_buffer(name)
        v *= momentum
        v += p.grad
        if weight_decay:
            v += weight_decay * p.data
        p.data -= lr * v
        p.grad = None

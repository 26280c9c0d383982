"""Central finite-difference verification of reverse-mode gradients."""

import numpy as np

from ..errors import InternalError
from .tensor import Tape


def grad_check(f, tensors, h=1e-5):
    """Compare reverse-mode gradients of the scalar ``f()`` against central
    differences over every element of ``tensors``.

    ``f`` must be deterministic and rebuild its graph on each call.  Returns
    (max_rel_err, location); relative error uses max(|analytic|, |numeric|,
    1e-8) as denominator.  Probe points must avoid kinks (relu at 0,
    max-pool ties); callers use random offsets for that.
    """
    tensors = list(tensors)
    for t in tensors:
        t.grad = None
    with Tape() as tape:
        out = f()
        tape.backward(out)
    analytic = []
    for t in tensors:
        if t.grad is None:
            analytic.append(np.zeros_like(t.data))
        else:
            analytic.append(t.grad.copy())
        t.grad = None

    worst = 0.0
    where = None
    for ti, t in enumerate(tensors):
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f().item()
            flat[i] = orig - h
            fm = f().item()
            flat[i] = orig
            num = (fp - fm) / (2.0 * h)
            ana = float(analytic[ti].reshape(-1)[i])
            if not (np.isfinite(num) and np.isfinite(ana)):
                raise InternalError(
                    f"grad_check: non-finite value at tensor {ti}, element {i} "
                    f"(analytic={ana}, numeric={num})"
                )
            err = abs(ana - num) / max(abs(ana), abs(num), 1e-8)
            if err > worst:
                worst = err
                where = (ti, i)
    return worst, where

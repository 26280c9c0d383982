"""Exact objective and gradient by enumerating every gate sequence.

For each of the 2^N decision paths the network runs with forced decisions;
the path probability is the product of the conditional gate probabilities
realized along that path (gates see activations shaped by earlier decisions,
which covers recurrent gates for free).  The objective

    J = E_x sum_g p(g | x) * [L(g, x) - (alpha/N) * sum_i R_i(g)]

and its parameter gradient are assembled inside the autodiff graph, so both
the dL and dlog-p routes are differentiated exactly.  Intended for tiny
networks; refuses N > 12.
"""

import numpy as np

from ..autodiff import Tape, add, mean, mul, reshape, scalar_add, softmax_cross_entropy
from ..errors import ConfigurationError
from .rewards import RewardConfig

MAX_GATES = 12


def enumerate_exact(net, xb, yb, cfg: RewardConfig, cost_table=None, bn_training=False):
    """Return (J, grads dict) summed over all 2^N paths, averaged over the batch."""
    n = net.num_gates
    if n > MAX_GATES:
        raise ConfigurationError(
            f"exact enumeration walks 2^N paths; N={n} exceeds the bound {MAX_GATES}"
        )
    costs = cfg.cost_vector(n, cost_table)
    bsz = len(yb)

    # Forward passes mutate batch-norm running stats; snapshot and restore so
    # the oracle is side-effect free.
    saved = {
        k: (s.running_mean.copy(), s.running_var.copy())
        for k, s in net.bn_states.items()
    }
    net.params.zero_grad()
    try:
        with Tape() as tape:
            obj = None
            for bits in range(2 ** n):
                g = np.array([(bits >> i) & 1 for i in range(n)], dtype=np.int8)
                logits, trace = net.forward(
                    xb, mode="forced", decisions=np.broadcast_to(g, (bsz, n)),
                    bn_training=bn_training,
                )
                loss_vec = softmax_cross_entropy(logits, yb)  # (B,)
                # Path probability per sample from the realized gate outputs.
                p = None
                for i, s_t in enumerate(trace.prob_tensors):
                    factor = s_t if g[i] else 1.0 - s_t
                    p = factor if p is None else mul(p, factor)
                p = reshape(p, (bsz,))
                reward_sum = float(((1.0 - g) * costs).sum())
                total = scalar_add(loss_vec, -(cfg.alpha / n) * reward_sum)
                contrib = mean(mul(p, total))
                obj = contrib if obj is None else add(obj, contrib)
            tape.backward(obj)
        grads = net.params.grads()
        return obj.item(), grads
    finally:
        net.params.zero_grad()
        for k, (m, v) in saved.items():
            net.bn_states[k].running_mean[...] = m
            net.bn_states[k].running_var[...] = v

"""Gated residual networks: construction and the four execution modes.

A block's gated output is g*F(x) + (1-g)*skip(x) where F is the full
residual block (main path plus internal shortcut), so g=1 recovers the plain
network block and g=0 the identity/shape-matched skip.  Training modes
evaluate every block densely (batch norm sees whole batches) and mix per
sample; inference mode genuinely skips the main path with eval-mode batch
norm.
"""

from dataclasses import dataclass

import numpy as np

from ..autodiff import (
    BNState,
    ParameterSet,
    Tensor,
    add,
    avg_pool2d,
    batch_norm2d,
    conv2d,
    global_avg_pool,
    hard_gate_blend,
    linear,
    lstm_cell,
    max_pool2d,
    pad_channels,
    relu,
    sigmoid,
    soft_gate_blend,
)
from ..errors import ConfigurationError, ContractError
from .config import SkipNetConfig

TRAIN_MODES = ("soft", "hard_st", "sample", "forced")
EVAL_MODES = ("inference", "dense")

# Gate decision heads start biased open (S ~ 0.82) so early straight-through
# updates cannot shut every block before the body has learned anything.
GATE_BIAS_INIT = 1.5


@dataclass
class GateTrace:
    """Per-sample record of gate probabilities and decisions for one forward."""

    mode: str
    probs: np.ndarray                 # (B, N) gate probabilities S_i(x)
    decisions: np.ndarray | None      # (B, N) {0,1}; None in soft mode
    prob_tensors: list | None = None  # graph-linked S tensors (training modes)

    def __post_init__(self):
        if self.decisions is not None:
            d = np.asarray(self.decisions)
            if not np.isin(d, (0, 1)).all():
                raise ContractError("hard-mode decisions must be binary")

    @property
    def num_gates(self):
        return self.probs.shape[1]

    def executed_counts(self):
        if self.decisions is None:
            raise ContractError("soft-mode trace has no executed-block counts")
        return self.decisions.sum(axis=1)

    def mean_executed(self):
        return float(self.executed_counts().mean())


def shortcut_path(x, stride, pad_to):
    """Identity, or 2x2 average pool + zero channel padding on shape change."""
    if stride == 1 and pad_to is None:
        return x
    s = avg_pool2d(x, 2, 2)
    if pad_to is not None and pad_to != s.data.shape[1]:
        s = pad_channels(s, pad_to)
    return s


def residual_block(x, conv1_w, bn1, conv2_w, bn2, params, stride, training, shortcut=None):
    """conv-bn-relu-conv-bn plus shortcut, followed by relu."""
    h = conv2d(x, conv1_w, stride=stride, padding=1)
    h = batch_norm2d(h, params[f"{bn1}.gamma"], params[f"{bn1}.beta"], bn1.state, training)
    h = relu(h)
    h = conv2d(h, conv2_w, stride=1, padding=1)
    h = batch_norm2d(h, params[f"{bn2}.gamma"], params[f"{bn2}.beta"], bn2.state, training)
    if shortcut is None:
        shortcut = x
    return relu(add(h, shortcut))


class _BN:
    """Pairs a parameter-name prefix with its running-stats buffer."""

    __slots__ = ("prefix", "state")

    def __init__(self, prefix, state):
        self.prefix = prefix
        self.state = state

    def __str__(self):
        return self.prefix


class SkipNet:
    """Stem + gated residual blocks + classifier, with per-block or shared gates."""

    def __init__(self, config: SkipNetConfig, seed=0):
        self.config = config
        self.params = ParameterSet()
        self.bn_states = {}
        self.layout = config.block_layout()
        rng = np.random.default_rng(seed)

        c_in = config.input_geometry[0]
        w0 = config.group_widths[0]
        self._add_conv(rng, "stem.conv", w0, c_in, 3)
        self._add_bn("stem.bn", w0)

        for i, _, cin, cout, _ in self.layout:
            self._add_conv(rng, f"block{i}.conv1", cout, cin, 3)
            self._add_bn(f"block{i}.bn1", cout)
            self._add_conv(rng, f"block{i}.conv2", cout, cout, 3)
            self._add_bn(f"block{i}.bn2", cout)

        self._add_linear(rng, "fc", config.group_widths[-1], config.num_classes)

        kind = config.gate_kind
        if kind in ("ffgate1", "ffgate2"):
            for i, _, cin, _, _ in self.layout:
                self._add_conv(rng, f"gate{i}.conv1", cin, cin, 3)
                self._add_bn(f"gate{i}.bn1", cin)
                if kind == "ffgate1":
                    self._add_conv(rng, f"gate{i}.conv2", cin, cin, 3)
                    self._add_bn(f"gate{i}.bn2", cin)
                self._add_linear(rng, f"gate{i}.fc", cin, 1)
                self.params[f"gate{i}.fc.b"].data[:] = GATE_BIAS_INIT
        elif kind == "rnngate":
            hid = config.gate_hidden
            for cin in sorted({cin for _, _, cin, _, _ in self.layout}):
                self._add_linear(rng, f"rnngate.proj{cin}", cin, hid)
            std = np.sqrt(2.0 / hid)
            self.params.add("rnngate.lstm.wx", rng.normal(0.0, std, (hid, 4 * hid)))
            self.params.add("rnngate.lstm.wh", rng.normal(0.0, std, (hid, 4 * hid)))
            b = np.zeros(4 * hid)
            b[hid : 2 * hid] = 1.0  # open forget gate at init
            self.params.add("rnngate.lstm.b", b)
            self._add_linear(rng, "rnngate.fc", hid, 1)
            self.params["rnngate.fc.b"].data[:] = GATE_BIAS_INIT

    # -- construction helpers ------------------------------------------------

    def _add_conv(self, rng, name, out_c, in_c, k):
        std = np.sqrt(2.0 / (in_c * k * k))
        self.params.add(name, rng.normal(0.0, std, (out_c, in_c, k, k)))

    def _add_linear(self, rng, name, d_in, d_out):
        std = np.sqrt(2.0 / d_in)
        self.params.add(f"{name}.w", rng.normal(0.0, std, (d_in, d_out)))
        self.params.add(f"{name}.b", np.zeros(d_out))

    def _add_bn(self, prefix, channels):
        self.params.add(f"{prefix}.gamma", np.ones(channels))
        self.params.add(f"{prefix}.beta", np.zeros(channels))
        self.bn_states[prefix] = BNState(channels)

    def _bn(self, prefix):
        return _BN(prefix, self.bn_states[prefix])

    @property
    def num_gates(self):
        return self.config.num_gates

    def gate_param_names(self):
        return [n for n in self.params.names() if n.startswith(("gate", "rnngate"))]

    def is_gate_param(self, name):
        return name.startswith(("gate", "rnngate"))

    # -- forward pieces ------------------------------------------------------

    def _stem(self, x, training):
        h = conv2d(x, self.params["stem.conv"], stride=1, padding=1)
        h = batch_norm2d(
            h, self.params["stem.bn.gamma"], self.params["stem.bn.beta"],
            self.bn_states["stem.bn"], training,
        )
        return relu(h)

    def _classifier(self, x):
        return linear(global_avg_pool(x), self.params["fc.w"], self.params["fc.b"])

    def _block(self, i, x, training, shortcut):
        stride = self.layout[i][4]
        return residual_block(
            x,
            self.params[f"block{i}.conv1"],
            self._bn(f"block{i}.bn1"),
            self.params[f"block{i}.conv2"],
            self._bn(f"block{i}.bn2"),
            self.params,
            stride,
            training,
            shortcut=shortcut,
        )

    def _block_shortcut(self, i, x):
        _, gi, cin, cout, stride = self.layout[i]
        if stride == 1 and cin == cout:
            return x
        return shortcut_path(x, stride, cout if cout != cin else None)

    def _ffgate_prob(self, i, x, training):
        p = self.params
        kind = self.config.gate_kind
        if kind == "ffgate1":
            if x.data.shape[2] < 4 or x.data.shape[3] < 4:
                raise ConfigurationError(
                    f"ffgate1 needs spatial dims >= 4, got {x.data.shape[2:]} at gate {i}"
                )
            h = max_pool2d(x, 2, 2)
            h = relu(batch_norm2d(conv2d(h, p[f"gate{i}.conv1"], 1, 1),
                                  p[f"gate{i}.bn1.gamma"], p[f"gate{i}.bn1.beta"],
                                  self.bn_states[f"gate{i}.bn1"], training))
            h = relu(batch_norm2d(conv2d(h, p[f"gate{i}.conv2"], 2, 1),
                                  p[f"gate{i}.bn2.gamma"], p[f"gate{i}.bn2.beta"],
                                  self.bn_states[f"gate{i}.bn2"], training))
        else:
            h = relu(batch_norm2d(conv2d(x, p[f"gate{i}.conv1"], 2, 1),
                                  p[f"gate{i}.bn1.gamma"], p[f"gate{i}.bn1.beta"],
                                  self.bn_states[f"gate{i}.bn1"], training))
        return sigmoid(linear(global_avg_pool(h), p[f"gate{i}.fc.w"], p[f"gate{i}.fc.b"]))

    def _rnngate_prob(self, i, x, carry):
        p = self.params
        cin = self.layout[i][2]
        u = linear(global_avg_pool(x), p[f"rnngate.proj{cin}.w"], p[f"rnngate.proj{cin}.b"])
        h, c = lstm_cell(u, carry[0], carry[1],
                         p["rnngate.lstm.wx"], p["rnngate.lstm.wh"], p["rnngate.lstm.b"])
        s = sigmoid(linear(h, p["rnngate.fc.w"], p["rnngate.fc.b"]))
        return s, (h, c)

    def _init_carry(self, batch_size):
        hid = self.config.gate_hidden
        return (Tensor(np.zeros((batch_size, hid))), Tensor(np.zeros((batch_size, hid))))

    # -- full forward ----------------------------------------------------

    def plain_forward(self, batch, bn_training=False):
        """Ungated pass: every block executes, gates are never evaluated."""
        x = Tensor(np.ascontiguousarray(batch, dtype=np.float64))
        x = self._stem(x, bn_training)
        for i in range(self.num_gates):
            x = self._block(i, x, bn_training, self._block_shortcut(i, x))
        return self._classifier(x)

    def forward(self, batch, mode, rng=None, decisions=None, gate_override=None,
                bn_training=None):
        """Run one batch; returns (logits Tensor, GateTrace).

        mode: 'soft' | 'hard_st' | 'sample' (training relaxations/estimators),
        'forced' (externally supplied decisions), 'inference' (hard decisions,
        skipped main paths not computed), 'dense' (hard decisions, everything
        computed and mixed -- the masked-execution oracle).
        """
        if mode not in TRAIN_MODES + EVAL_MODES:
            raise ConfigurationError(f"unknown mode: {mode!r}")
        if mode == "sample" and rng is None and gate_override is None:
            raise ConfigurationError("sample mode needs an rng")
        if mode == "forced" and decisions is None and gate_override is None:
            raise ConfigurationError("forced mode needs a decisions array")

        x_arr = np.ascontiguousarray(batch, dtype=np.float64)
        bsz = x_arr.shape[0]
        n = self.num_gates
        training = bn_training if bn_training is not None else mode in TRAIN_MODES

        if decisions is not None:
            decisions = np.asarray(decisions)
            if decisions.ndim == 1:
                decisions = np.broadcast_to(decisions, (bsz, n))
            if decisions.shape != (bsz, n):
                raise ConfigurationError(
                    f"decisions shape {decisions.shape} != ({bsz}, {n})"
                )

        probs = np.ones((bsz, n))
        decs = np.zeros((bsz, n), dtype=np.int8)
        s_tensors = [None] * n
        gated = self.config.gate_kind is not None
        soft = mode == "soft" and gate_override is None

        x = Tensor(x_arr)
        x = self._stem(x, training)
        carry = self._init_carry(bsz) if self.config.gate_kind == "rnngate" else None

        for i in range(n):
            s_t = None
            if gated:
                if self.config.gate_kind == "rnngate":
                    s_t, carry = self._rnngate_prob(i, x, carry)
                else:
                    s_t = self._ffgate_prob(i, x, training)
                probs[:, i] = s_t.data.ravel()
                s_tensors[i] = s_t

            if gate_override == "execute_all":
                g = np.ones(bsz)
            elif gate_override == "skip_all":
                g = np.zeros(bsz)
            elif mode == "forced" and decisions is not None:
                g = decisions[:, i].astype(np.float64)
            elif mode == "sample":
                g = (rng.random(bsz) < probs[:, i]).astype(np.float64)
            elif soft:
                g = None
            else:
                g = (probs[:, i] >= 0.5).astype(np.float64)

            if not gated and g is None:
                g = np.ones(bsz)
            if not gated and mode not in ("forced",) and gate_override is None:
                # plain network: execute everything, no blending
                x = self._block(i, x, training, self._block_shortcut(i, x))
                decs[:, i] = 1
                continue

            if g is not None:
                decs[:, i] = g.astype(np.int8)

            if mode == "inference":
                x = self._sparse_block(i, x, g)
            else:
                sx = self._block_shortcut(i, x)
                fx = self._block(i, x, training, sx)
                if soft:
                    x = soft_gate_blend(fx, sx, s_t)
                else:
                    x = hard_gate_blend(fx, sx, s_t, g,
                                        straight_through=(mode == "hard_st"))

        logits = self._classifier(x)
        trace = GateTrace(
            mode=mode,
            probs=probs,
            decisions=None if soft else decs,
            prob_tensors=s_tensors if gated else None,
        )
        return logits, trace

    def _sparse_block(self, i, x, g):
        """Evaluate the block main path only for samples whose gate fired."""
        mask = g.astype(bool)
        sx_full = self._block_shortcut(i, x)
        if mask.all():
            return self._block(i, x, False, sx_full)
        if not mask.any():
            return sx_full
        sub = Tensor(x.data[mask])
        sub_sc = self._block_shortcut(i, sub)
        fx = self._block(i, sub, False, sub_sc)
        out = sx_full.data.copy()
        out[mask] = fx.data
        return Tensor(out)

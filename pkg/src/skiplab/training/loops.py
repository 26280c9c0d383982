"""Training loops: supervised pre-training, hybrid refinement, evaluation.

Stage 1 minimizes cross-entropy with straight-through gates (hard forward,
soft backward).  Stage 2 draws gate decisions, scores them with cumulative
returns, and descends the surrogate whose gradient is the supervised term
plus the score-function (REINFORCE) term.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Tape, Tensor, add, clip, log, mean, mul, sgd_step, softmax_cross_entropy, tsum
from ..costs import block_and_gate_costs, expected_cost
from ..errors import ConfigurationError, InternalError
from ..data.transforms import augment_train
from .rewards import LOGPROB_CLIP, compute_returns


@dataclass
class TrainSchedule:
    epochs: int = 10
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    lr_milestones: tuple = (0.5, 0.75)   # fractions of epochs; x0.1 decay at each
    batch_size: int = 128
    augment: bool = False
    stage2_iterations: int = 1000
    stage2_lr: float = 1e-4
    stage2_batch_size: int = 128
    log_every: int = 200

    def lr_at(self, epoch):
        lr = self.lr
        for frac in self.lr_milestones:
            if epoch >= int(frac * self.epochs):
                lr *= 0.1
        return lr


def _metrics_row(epoch, train_loss, train_acc, ev, wall):
    return {
        "epoch": epoch,
        "train_loss": train_loss,
        "train_acc": train_acc,
        "test_acc": ev["accuracy"],
        "mean_exec_blocks": ev["mean_exec_blocks"],
        "mean_mac_cost": ev["mean_mac_cost"],
        "wall_seconds": wall,
    }


def evaluate(net, dataset, batch_size=256, cost_table=None, mode="inference",
             decisions_fn=None, gate_override=None):
    """Accuracy, executed-block and MAC statistics in true skipping mode."""
    if cost_table is None:
        cost_table = block_and_gate_costs(net.config)
    correct = 0
    counts = []
    all_dec = []
    for lo in range(0, len(dataset), batch_size):
        xb = dataset.images[lo : lo + batch_size]
        yb = dataset.labels[lo : lo + batch_size]
        if decisions_fn is not None:
            logits, trace = net.forward(
                xb, mode="forced", decisions=decisions_fn(len(xb)), bn_training=False
            )
        else:
            logits, trace = net.forward(xb, mode=mode, gate_override=gate_override)
        correct += int((logits.data.argmax(axis=1) == yb).sum())
        counts.append(trace.executed_counts())
        all_dec.append(trace.decisions)
    decisions = np.concatenate(all_dec)
    counts = np.concatenate(counts)
    cost = expected_cost(decisions, cost_table)
    return {
        "accuracy": correct / len(dataset),
        "mean_exec_blocks": float(counts.mean()),
        "exec_counts": counts,
        "per_gate_exec_rate": decisions.mean(axis=0),
        "mean_mac_cost": cost["mean"],
        "cost_reduction": cost["reduction"],
        "per_sample_macs": cost["per_sample"],
    }


def pretrain_supervised(net, train_ds, test_ds, schedule, seed, gate_mode="hard_st",
                        cost_table=None, log=None):
    """Stage 1: cross-entropy with relaxed gates; returns per-epoch metrics."""
    if gate_mode not in ("hard_st", "soft"):
        raise ConfigurationError(f"gate_mode must be hard_st or soft, got {gate_mode!r}")
    if len(train_ds) == 0:
        raise ConfigurationError("empty training dataset")
    if cost_table is None:
        cost_table = block_and_gate_costs(net.config)
    rows = []
    t0 = time.time()
    for epoch in range(schedule.epochs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, epoch, 101]))
        order = rng.permutation(len(train_ds))
        lr = schedule.lr_at(epoch)
        losses, correct, seen = 0.0, 0, 0
        for lo in range(0, len(order), schedule.batch_size):
            idx = order[lo : lo + schedule.batch_size]
            xb = train_ds.images[idx]
            if schedule.augment:
                xb = augment_train(xb, rng)
            yb = train_ds.labels[idx]
            with Tape() as tape:
                logits, _ = net.forward(xb, mode=gate_mode)
                loss = mean(softmax_cross_entropy(logits, yb))
                tape.backward(loss)
            net.params.fill_missing_grads()
            lval = loss.item()
            if not np.isfinite(lval):
                raise InternalError(
                    f"training diverged: loss={lval} at epoch {epoch}, step {lo}"
                )
            sgd_step(net.params, lr, schedule.momentum, schedule.weight_decay)
            losses += lval * len(idx)
            correct += int((logits.data.argmax(axis=1) == yb).sum())
            seen += len(idx)
        ev = evaluate(net, test_ds, cost_table=cost_table)
        row = _metrics_row(epoch, losses / seen, correct / seen, ev, time.time() - t0)
        rows.append(row)
        if log:
            log(row)
    return rows


def hybrid_step(net, xb, yb, cfg, rng, cost_table=None, pure_rl=False,
                bn_training=True):
    """One sampled-gate step: populate gradients of the hybrid surrogate.

    Surrogate per sample: L - sum_i stopgrad(r_hat_i) * log p(g_i | x); its
    gradient is the supervised term through the executed path plus the
    REINFORCE term through the gate parameters.  Gradients are averaged over
    the batch and left on the parameters (caller applies the update).
    """
    bsz = len(yb)
    with Tape() as tape:
        logits, trace = net.forward(xb, mode="sample", rng=rng, bn_training=bn_training)
        loss_vec = softmax_cross_entropy(logits, yb)
        record = compute_returns(trace, loss_vec.data, cfg, cost_table)
        obj = None if pure_rl else mean(loss_vec)
        if trace.prob_tensors is not None:
            g = trace.decisions.astype(np.float64)
            for i, s_t in enumerate(trace.prob_tensors):
                s_c = clip(s_t, LOGPROB_CLIP, 1.0 - LOGPROB_CLIP)
                gi = Tensor(g[:, i : i + 1])
                logp = add(mul(gi, log(s_c)), mul(1.0 - gi, log(1.0 - s_c)))
                weight = Tensor((-record.relaxed[:, i] / bsz).reshape(-1, 1))
                term = tsum(mul(logp, weight))
                obj = term if obj is None else add(obj, term)
        if obj is None:
            raise ConfigurationError("pure RL needs a gated network")
        tape.backward(obj)
    net.params.fill_missing_grads()
    mean_loss = float(record.losses.mean())
    if not np.isfinite(mean_loss):
        raise InternalError(f"hybrid step diverged: loss={mean_loss}")
    return {
        "loss": mean_loss,
        "accuracy": float((logits.data.argmax(axis=1) == yb).mean()),
        "mean_exec_blocks": trace.mean_executed(),
        "mean_reward": float(record.rewards.mean()),
        "record": record,
        "trace": trace,
    }


def refine_hybrid(net, train_ds, test_ds, schedule, cfg, rng, cost_table=None,
                  pure_rl=False, iterations=None, start_iteration=0, log=None):
    """Stage 2: REINFORCE refinement from the rng's current state.

    Evaluation (always true-skipping inference mode) happens every
    ``log_every`` iterations and at the end; rows reuse the stage-1 schema
    with the iteration count in the epoch column.
    """
    if cost_table is None:
        cost_table = block_and_gate_costs(net.config)
    total = schedule.stage2_iterations if iterations is None else iterations
    rows = []
    t0 = time.time()
    losses, correct, seen = 0.0, 0, 0
    for it in range(start_iteration, start_iteration + total):
        idx = rng.integers(0, len(train_ds), size=schedule.stage2_batch_size)
        xb = train_ds.images[idx]
        if schedule.augment:
            xb = augment_train(xb, rng)
        yb = train_ds.labels[idx]
        stats = hybrid_step(net, xb, yb, cfg, rng, cost_table, pure_rl=pure_rl)
        sgd_step(net.params, schedule.stage2_lr, schedule.momentum,
                 schedule.weight_decay)
        losses += stats["loss"] * len(yb)
        correct += int(stats["accuracy"] * len(yb))
        seen += len(yb)
        if (it + 1) % schedule.log_every == 0 or it + 1 == start_iteration + total:
            ev = evaluate(net, test_ds, cost_table=cost_table)
            row = _metrics_row(it + 1, losses / max(seen, 1), correct / max(seen, 1),
                               ev, time.time() - t0)
            rows.append(row)
            if log:
                log(row)
            losses, correct, seen = 0.0, 0, 0
    if total == 0:
        ev = evaluate(net, test_ds, cost_table=cost_table)
        rows.append(_metrics_row(start_iteration, 0.0, 0.0, ev, time.time() - t0))
    return rows


def sdv_train(net, train_ds, test_ds, skip_ratio, schedule, seed, cost_table=None,
              log=None):
    """Stochastic-depth-variant baseline: blocks drop i.i.d. with probability
    ``skip_ratio`` during both training and evaluation (no rescaling).

    The network is built ungated; decisions come from a dedicated stream so a
    ratio of 0 reproduces plain supervised training draw-for-draw.
    """
    if not 0.0 <= skip_ratio <= 1.0:
        raise ConfigurationError(f"skip ratio must be in [0, 1], got {skip_ratio}")
    if cost_table is None:
        cost_table = block_and_gate_costs(net.config)
    n = net.num_gates
    rows = []
    t0 = time.time()
    for epoch in range(schedule.epochs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, epoch, 101]))
        gate_rng = np.random.default_rng(np.random.SeedSequence([seed, epoch, 202]))
        order = rng.permutation(len(train_ds))
        lr = schedule.lr_at(epoch)
        losses, correct, seen = 0.0, 0, 0
        for lo in range(0, len(order), schedule.batch_size):
            idx = order[lo : lo + schedule.batch_size]
            xb = train_ds.images[idx]
            if schedule.augment:
                xb = augment_train(xb, rng)
            yb = train_ds.labels[idx]
            dec = (gate_rng.random((len(idx), n)) >= skip_ratio).astype(np.int8)
            with Tape() as tape:
                logits, _ = net.forward(xb, mode="forced", decisions=dec)
                loss = mean(softmax_cross_entropy(logits, yb))
                tape.backward(loss)
            net.params.fill_missing_grads()
            if not np.isfinite(loss.item()):
                raise InternalError(f"SDV diverged at epoch {epoch}, step {lo}")
            sgd_step(net.params, lr, schedule.momentum, schedule.weight_decay)
            losses += loss.item() * len(idx)
            correct += int((logits.data.argmax(axis=1) == yb).sum())
            seen += len(idx)
        eval_rng = np.random.default_rng(np.random.SeedSequence([seed, epoch, 303]))
        ev = evaluate(
            net, test_ds, cost_table=cost_table,
            decisions_fn=lambda b: (eval_rng.random((b, n)) >= skip_ratio).astype(np.int8),
        )
        row = _metrics_row(epoch, losses / seen, correct / seen, ev, time.time() - t0)
        rows.append(row)
        if log:
            log(row)
    return rows

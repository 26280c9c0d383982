"""Skip rewards and cumulative returns for the hybrid objective.

Per gate i the reward is R_i = (1 - g_i) * C_i: skipping a block earns its
cost.  The return from gate i is
    r_i      = -[L        - (alpha/N) * sum_{j>=i} R_j]
    r_hat_i  = -[beta * L - (alpha/N) * sum_{j>=i} R_j]
so with beta = 1 the relaxed return equals r_i exactly.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, ContractError

LOGPROB_CLIP = 1e-6


@dataclass
class RewardConfig:
    alpha: float = 1.0
    beta: float = 1.0
    costs: np.ndarray | None = None   # per-gate C_i; None means all 1.0
    use_mac_costs: bool = False       # substitute normalized analytic block costs
    moving_baseline: bool = False     # optional per-gate baseline, off by default

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta <= 0:
            raise ConfigurationError(f"beta must be > 0, got {self.beta}")

    def cost_vector(self, num_gates, cost_table=None):
        if self.use_mac_costs:
            if cost_table is None:
                raise ConfigurationError("use_mac_costs needs a cost table")
            c = cost_table.normalized_block_costs()
        elif self.costs is not None:
            c = np.asarray(self.costs, dtype=np.float64)
        else:
            c = np.ones(num_gates)
        if c.shape != (num_gates,):
            raise ConfigurationError(
                f"costs length {c.shape} != number of gates {num_gates}"
            )
        if (c <= 0).any():
            raise ConfigurationError("all per-gate costs must be > 0")
        return c


@dataclass
class ReturnRecord:
    rewards: np.ndarray        # (B, N) R_i
    returns: np.ndarray        # (B, N) r_i
    relaxed: np.ndarray        # (B, N) r_hat_i
    losses: np.ndarray         # (B,) per-sample L
    log_probs: np.ndarray      # (B, N) log p(g_i | x), clipped probabilities


def compute_returns(trace, losses, cfg, cost_table=None):
    """Evaluate the return identities for one hard/sample-mode trace."""
    if trace.decisions is None:
        raise ContractError("compute_returns needs hard decisions, got a soft-mode trace")
    g = trace.decisions.astype(np.float64)
    b, n = g.shape
    losses = np.asarray(losses, dtype=np.float64).reshape(b)
    costs = cfg.cost_vector(n, cost_table)

    rewards = (1.0 - g) * costs[None, :]
    future = np.cumsum(rewards[:, ::-1], axis=1)[:, ::-1]  # sum_{j>=i} R_j
    shaped = (cfg.alpha / n) * future
    returns = -(losses[:, None] - shaped)
    relaxed = -(cfg.beta * losses[:, None] - shaped)

    probs = np.clip(trace.probs, LOGPROB_CLIP, 1.0 - LOGPROB_CLIP)
    log_probs = g * np.log(probs) + (1.0 - g) * np.log(1.0 - probs)
    return ReturnRecord(rewards, returns, relaxed, losses, log_probs)

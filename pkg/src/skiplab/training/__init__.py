from .rewards import LOGPROB_CLIP, RewardConfig, ReturnRecord, compute_returns
from .loops import (
    TrainSchedule,
    evaluate,
    hybrid_step,
    pretrain_supervised,
    refine_hybrid,
    sdv_train,
)
from .exact import enumerate_exact

__all__ = [
    "LOGPROB_CLIP",
    "RewardConfig",
    "ReturnRecord",
    "compute_returns",
    "TrainSchedule",
    "evaluate",
    "hybrid_step",
    "pretrain_supervised",
    "refine_hybrid",
    "sdv_train",
    "enumerate_exact",
]

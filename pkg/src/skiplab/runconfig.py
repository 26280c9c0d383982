"""Flat JSON run configuration shared by every CLI command."""

import json
import os
from dataclasses import dataclass, field, fields

from .errors import ConfigurationError
from .network.config import SkipNetConfig
from .training.loops import TrainSchedule
from .training.rewards import RewardConfig


@dataclass
class RunConfig:
    # model
    n: int = 2
    group_widths: list = field(default_factory=lambda: [16, 32, 64])
    gate_kind: str | None = "rnngate"
    num_classes: int = 10
    input_geometry: list = field(default_factory=lambda: [3, 32, 32])
    gate_hidden: int = 10
    # stage 1
    epochs: int = 10
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    lr_milestones: list = field(default_factory=lambda: [0.5, 0.75])
    batch_size: int = 128
    augment: bool = False
    gate_train_mode: str = "hard_st"     # or "soft" for the soft-gating ablation
    # stage 2
    stage2_iterations: int = 1000
    stage2_lr: float = 1e-4
    stage2_batch_size: int = 128
    log_every: int = 200
    # reward
    alpha: float = 1.0
    beta: float = 1.0
    use_mac_costs: bool = False
    # run
    dataset: str = "cifar10"             # cifar10 | idx | synthetic-separable | synthetic-redundant
    data_dir: str = ""
    subset_per_class: int = 0            # 0 = full dataset
    synthetic_train: int = 4096
    synthetic_test: int = 1024
    seed: int = 0
    out_dir: str = "runs/out"
    threads: int = 1

    def validate(self):
        if self.gate_train_mode not in ("hard_st", "soft"):
            raise ConfigurationError(
                f"gate_train_mode must be hard_st or soft, got {self.gate_train_mode!r}"
            )
        self.network_config()  # raises on bad architecture/geometry
        return self

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d).validate()

    @classmethod
    def load(cls, path):
        try:
            with open(path) as f:
                d = json.load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"config file {path} is not valid JSON: {e}")
        return cls.from_dict(d)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def dump(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    # -- views over the flat document ------------------------------------

    def network_config(self):
        return SkipNetConfig(
            n=self.n,
            group_widths=tuple(self.group_widths),
            gate_kind=self.gate_kind,
            num_classes=self.num_classes,
            input_geometry=tuple(self.input_geometry),
            gate_hidden=self.gate_hidden,
        )

    def schedule(self):
        return TrainSchedule(
            epochs=self.epochs,
            lr=self.lr,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            lr_milestones=tuple(self.lr_milestones),
            batch_size=self.batch_size,
            augment=self.augment,
            stage2_iterations=self.stage2_iterations,
            stage2_lr=self.stage2_lr,
            stage2_batch_size=self.stage2_batch_size,
            log_every=self.log_every,
        )

    def reward_config(self):
        return RewardConfig(
            alpha=self.alpha, beta=self.beta, use_mac_costs=self.use_mac_costs
        )

from .dataset import LabeledDataset, compute_channel_stats, denormalize, normalize
from .cifar import load_cifar10, write_cifar10_batches
from .idx import load_idx, write_idx
from .transforms import augment_train, resize_scale
from .synthetic import synthetic_make

__all__ = [
    "LabeledDataset",
    "compute_channel_stats",
    "denormalize",
    "normalize",
    "load_cifar10",
    "write_cifar10_batches",
    "load_idx",
    "write_idx",
    "augment_train",
    "resize_scale",
    "synthetic_make",
]

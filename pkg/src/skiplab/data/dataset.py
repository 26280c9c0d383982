"""In-memory labeled image datasets (NCHW) with per-channel statistics."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, DataError


@dataclass
class LabeledDataset:
    images: np.ndarray                 # (N, C, H, W); byte-valued before normalize
    labels: np.ndarray                 # (N,) int64 class indices
    class_names: list | None = None
    channel_stats: tuple | None = None  # (mean, std) per channel once normalized

    def __post_init__(self):
        self.images = np.asarray(self.images)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise DataError(f"images must be (N, C, H, W), got {self.images.shape}")
        if len(self.labels) != len(self.images):
            raise DataError(
                f"{len(self.images)} images but {len(self.labels)} labels"
            )

    def __len__(self):
        return len(self.images)

    @property
    def num_classes(self):
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    @property
    def geometry(self):
        return tuple(self.images.shape[1:])

    def subset_per_class(self, k):
        """First k samples of each class, in file order."""
        keep = []
        seen = {}
        for i, y in enumerate(self.labels):
            y = int(y)
            if seen.get(y, 0) < k:
                seen[y] = seen.get(y, 0) + 1
                keep.append(i)
        keep = np.asarray(keep)
        return LabeledDataset(
            self.images[keep], self.labels[keep], self.class_names, self.channel_stats
        )

    def take(self, indices):
        return LabeledDataset(
            self.images[indices], self.labels[indices], self.class_names, self.channel_stats
        )


def compute_channel_stats(images):
    """Per-channel mean/std over all samples and pixels (single pass)."""
    x = images.astype(np.float64)
    mean = x.mean(axis=(0, 2, 3))
    std = x.std(axis=(0, 2, 3))
    if not (np.isfinite(mean).all() and np.isfinite(std).all()):
        raise DataError("non-finite channel statistics")
    if (std <= 0).any():
        ch = int(np.argmax(std <= 0))
        raise DataError(f"channel {ch} is constant (std 0); cannot normalize")
    return mean, std


def normalize(dataset, stats=None):
    """Standardize images per channel.

    With ``stats=None`` the statistics come from this dataset (call it on the
    training split) and are returned for reuse on held-out splits.
    """
    if stats is None:
        stats = compute_channel_stats(dataset.images)
    mean, std = stats
    imgs = (dataset.images.astype(np.float64) - mean[None, :, None, None]) / std[
        None, :, None, None
    ]
    return (
        LabeledDataset(imgs, dataset.labels, dataset.class_names, channel_stats=stats),
        stats,
    )


def denormalize(images, stats):
    mean, std = stats
    return images * std[None, :, None, None] + mean[None, :, None, None]

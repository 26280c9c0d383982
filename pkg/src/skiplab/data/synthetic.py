"""Synthetic byte-image datasets for fast, controllable experiments.

Two flavors:

* ``separable`` — each class is a smooth random template plus pixel noise;
  spatially structured, learnable by a small residual network.
* ``redundant-blocks`` — class identity is carried entirely by per-channel
  global offsets on a shared background, so the stem + classifier alone can
  solve it and every gated block is redundant (the optimal policy skips all).
"""

import numpy as np

from ..errors import ConfigurationError
from .dataset import LabeledDataset
from .transforms import resize_scale

KINDS = ("separable", "redundant-blocks")


def synthetic_make(kind, n, seed, num_classes=10, geometry=(3, 16, 16), noise=24.0,
                   sample_stream=0):
    """Generate ``n`` byte images.

    ``seed`` fixes the class templates; ``sample_stream`` selects an
    independent draw of samples from the same population, so train/test
    splits share templates (same seed, different streams).
    """
    if kind not in KINDS:
        raise ConfigurationError(f"unknown synthetic kind {kind!r}; choose from {KINDS}")
    if n < 2 * num_classes:
        raise ConfigurationError(
            f"need at least {2 * num_classes} samples for {num_classes} classes, got {n}"
        )
    c, h, w = geometry
    if h % 4 or w % 4:
        raise ConfigurationError(f"geometry {h}x{w} must be divisible by 4")
    template_rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 13, sample_stream]))

    if kind == "separable":
        coarse = template_rng.normal(0.0, 1.0, (num_classes, c, 4, 4))
        templates = resize_scale(coarse.reshape(num_classes * c, 1, 4, 4), h / 4)
        templates = templates.reshape(num_classes, c, h, w)
        templates = 128.0 + 110.0 * templates / max(np.abs(templates).max(), 1e-9)
    else:
        base = resize_scale(template_rng.normal(0.0, 1.0, (c, 1, 4, 4)), h / 4)
        base = 128.0 + 30.0 * base.reshape(c, h, w)
        offsets = template_rng.uniform(-60.0, 60.0, (num_classes, c))
        templates = base[None] + offsets[:, :, None, None]

    labels = np.arange(n) % num_classes
    labels = labels[rng.permutation(n)]
    imgs = templates[labels] + rng.normal(0.0, noise, (n, c, h, w))
    imgs = np.clip(np.rint(imgs), 0, 255).astype(np.uint8)
    names = [f"class_{k}" for k in range(num_classes)]
    return LabeledDataset(imgs, labels, class_names=names)

"""CIFAR-10 binary batch format: 1 label byte + 3072 pixel bytes per record
(1024 bytes per channel, R then G then B, row-major)."""

import os

import numpy as np

from ..errors import DataError
from .dataset import LabeledDataset

RECORD_BYTES = 1 + 3 * 32 * 32
TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
TEST_FILE = "test_batch.bin"
CLASS_NAMES = [
    "airplane", "automobile", "bird", "cat", "deer",
    "dog", "frog", "horse", "ship", "truck",
]


def _read_batch(path):
    if not os.path.exists(path):
        raise DataError(f"missing CIFAR-10 batch file: {path}")
    raw = np.fromfile(path, dtype=np.uint8)
    n, rem = divmod(raw.size, RECORD_BYTES)
    if rem or n == 0:
        raise DataError(
            f"{path}: {raw.size} bytes is not a whole number of {RECORD_BYTES}-byte "
            f"records (truncated at byte offset {n * RECORD_BYTES})"
        )
    rec = raw.reshape(n, RECORD_BYTES)
    labels = rec[:, 0].astype(np.int64)
    images = rec[:, 1:].reshape(n, 3, 32, 32)
    return images, labels


def load_cifar10(data_dir, subset_per_class=None):
    """Load the six binary batches; optionally keep the first k per class."""
    if not os.path.isdir(data_dir):
        raise DataError(f"CIFAR-10 directory not found: {data_dir}")
    imgs, labs = [], []
    for fname in TRAIN_FILES:
        im, lb = _read_batch(os.path.join(data_dir, fname))
        imgs.append(im)
        labs.append(lb)
    train = LabeledDataset(np.concatenate(imgs), np.concatenate(labs), CLASS_NAMES)
    im, lb = _read_batch(os.path.join(data_dir, TEST_FILE))
    test = LabeledDataset(im, lb, CLASS_NAMES)
    if subset_per_class is not None:
        train = train.subset_per_class(subset_per_class)
    return train, test


def write_cifar10_batches(data_dir, train, test):
    """Write datasets back out in the binary batch format (byte-exact)."""
    os.makedirs(data_dir, exist_ok=True)
    n = len(train)
    if n % 5:
        raise DataError(f"training set size {n} not divisible into 5 batches")
    per = n // 5
    for i, fname in enumerate(TRAIN_FILES):
        _write_batch(os.path.join(data_dir, fname),
                     train.images[i * per : (i + 1) * per],
                     train.labels[i * per : (i + 1) * per])
    _write_batch(os.path.join(data_dir, TEST_FILE), test.images, test.labels)


def _write_batch(path, images, labels):
    n = len(images)
    rec = np.empty((n, RECORD_BYTES), dtype=np.uint8)
    rec[:, 0] = labels.astype(np.uint8)
    rec[:, 1:] = np.asarray(images, dtype=np.uint8).reshape(n, -1)
    rec.tofile(path)

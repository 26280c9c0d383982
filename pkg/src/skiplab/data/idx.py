"""IDX (ubyte) image/label files: big-endian magic and dimension fields."""

import struct

import numpy as np

from ..errors import DataError
from .dataset import LabeledDataset

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def load_idx(images_path, labels_path):
    with open(images_path, "rb") as f:
        magic, n, rows, cols = struct.unpack(">IIII", f.read(16))
        if magic != IMAGE_MAGIC:
            raise DataError(
                f"{images_path}: bad image magic 0x{magic:08x} (expected 0x{IMAGE_MAGIC:08x})"
            )
        data = np.frombuffer(f.read(), dtype=np.uint8)
    if data.size != n * rows * cols:
        raise DataError(
            f"{images_path}: expected {n * rows * cols} pixel bytes, got {data.size}"
        )
    images = data.reshape(n, 1, rows, cols)

    with open(labels_path, "rb") as f:
        magic, m = struct.unpack(">II", f.read(8))
        if magic != LABEL_MAGIC:
            raise DataError(
                f"{labels_path}: bad label magic 0x{magic:08x} (expected 0x{LABEL_MAGIC:08x})"
            )
        labels = np.frombuffer(f.read(), dtype=np.uint8)
    if labels.size != m:
        raise DataError(f"{labels_path}: expected {m} labels, got {labels.size}")
    if m != n:
        raise DataError(f"image count {n} != label count {m}")
    return LabeledDataset(images, labels.astype(np.int64))


def write_idx(images_path, labels_path, dataset):
    imgs = np.asarray(dataset.images, dtype=np.uint8)
    n, c, rows, cols = imgs.shape
    if c != 1:
        raise DataError(f"IDX writer stores grayscale only, got {c} channels")
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(imgs.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, n))
        f.write(dataset.labels.astype(np.uint8).tobytes())

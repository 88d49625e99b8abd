"""MNIST ingestion: IDX container parsing, balanced subset selection.

The IDX format is the big-endian binary container the MNIST distribution
ships in.  Image files carry magic 0x00000803 followed by three dimension
words (count, rows, cols) and one byte per pixel; label files carry magic
0x00000801, a count word, and one byte per label.  Gzip-wrapped files are
accepted transparently (detected by the 0x1F8B prefix).
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_IMAGE_MAGIC = 0x00000803
_LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    """Flattened images in [0,1] paired with digit labels 0..9."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        images = np.asarray(self.images, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if images.ndim != 2 or images.shape[1] != 784:
            raise ValueError(f"images must have shape (count, 784), got {images.shape}")
        if labels.shape != (images.shape[0],):
            raise ValueError(
                f"{images.shape[0]} images but {labels.shape[0] if labels.ndim == 1 else labels.shape} labels"
            )
        if images.size and (images.min() < 0.0 or images.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")
        if labels.size and (labels.min() < 0 or labels.max() > 9):
            raise ValueError("labels must lie in 0..9")
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.images.shape[0]


def _maybe_gunzip(payload: bytes) -> bytes:
    if payload[:2] == b"\x1f\x8b":
        return gzip.decompress(payload)
    return payload


def parse_idx_images(payload: bytes) -> np.ndarray:
    """Parse an IDX3 image payload into a (count, 784) float array in [0,1]."""
    payload = _maybe_gunzip(payload)
    if len(payload) < 16:
        raise ValueError(
            f"truncated IDX image payload: header needs 16 bytes, got {len(payload)}"
        )
    magic, count, rows, cols = struct.unpack(">IIII", payload[:16])
    if magic != _IMAGE_MAGIC:
        raise ValueError(
            f"bad image magic 0x{magic:08X}, expected 0x{_IMAGE_MAGIC:08X}"
        )
    if (rows, cols) != (28, 28):
        raise ValueError(f"expected 28x28 images, got {rows}x{cols}")
    expected = 16 + count * rows * cols
    if len(payload) < expected:
        raise ValueError(
            f"truncated IDX image payload at byte {len(payload)}, expected {expected}"
        )
    pixels = np.frombuffer(payload[16:expected], dtype=np.uint8)
    return pixels.reshape(count, rows * cols).astype(float) / 255.0


def parse_idx_labels(payload: bytes) -> np.ndarray:
    """Parse an IDX1 label payload into an integer array with entries 0..9."""
    payload = _maybe_gunzip(payload)
    if len(payload) < 8:
        raise ValueError(
            f"truncated IDX label payload: header needs 8 bytes, got {len(payload)}"
        )
    magic, count = struct.unpack(">II", payload[:8])
    if magic != _LABEL_MAGIC:
        raise ValueError(
            f"bad label magic 0x{magic:08X}, expected 0x{_LABEL_MAGIC:08X}"
        )
    expected = 8 + count
    if len(payload) < expected:
        raise ValueError(
            f"truncated IDX label payload at byte {len(payload)}, expected {expected}"
        )
    labels = np.frombuffer(payload[8:expected], dtype=np.uint8).astype(int)
    if labels.size and labels.max() > 9:
        offending = int(labels[labels > 9][0])
        raise ValueError(f"label byte {offending} out of range 0..9")
    return labels


def serialize_idx_images(images: np.ndarray) -> bytes:
    """Inverse of parse_idx_images: pack [0,1] floats back into IDX3 bytes.

    Pixels are recovered as round(value * 255), so a parse/serialize
    round-trip reproduces the original file bit-exactly.
    """
    images = np.asarray(images, dtype=float)
    if images.ndim != 2 or images.shape[1] != 784:
        raise ValueError(f"images must have shape (count, 784), got {images.shape}")
    header = struct.pack(">IIII", _IMAGE_MAGIC, images.shape[0], 28, 28)
    pixels = np.rint(images * 255.0).astype(np.uint8)
    return header + pixels.tobytes()


def serialize_idx_labels(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=int)
    if labels.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if labels.size and (labels.min() < 0 or labels.max() > 9):
        raise ValueError("labels must lie in 0..9")
    header = struct.pack(">II", _LABEL_MAGIC, labels.size)
    return header + labels.astype(np.uint8).tobytes()


def load_dataset(mnist_dir) -> Dataset:
    """Load the training images and labels from a directory of IDX files.

    Looks for the standard distribution names train-images-idx3-ubyte and
    train-labels-idx1-ubyte, with or without a .gz suffix.
    """
    root = Path(mnist_dir)
    images_raw = _read_first(root, "train-images-idx3-ubyte")
    labels_raw = _read_first(root, "train-labels-idx1-ubyte")
    images = parse_idx_images(images_raw)
    labels = parse_idx_labels(labels_raw)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(
            f"count mismatch: {images.shape[0]} images but {labels.shape[0]} labels"
        )
    return Dataset(images, labels)


def _read_first(root: Path, stem: str) -> bytes:
    for name in (stem, stem + ".gz"):
        path = root / name
        if path.is_file():
            return path.read_bytes()
    raise FileNotFoundError(f"no {stem}[.gz] under {root}")


def _balanced_indices(labels: np.ndarray, total: int, classes: int, seed: int) -> np.ndarray:
    """Ascending indices of the seeded class-balanced selection."""
    if not isinstance(total, (int, np.integer)) or total < 1:
        raise ValueError(f"total must be a positive integer, got {total!r}")
    if not isinstance(classes, (int, np.integer)) or not 2 <= classes <= 10:
        raise ValueError(f"classes must be an integer in 2..10, got {classes!r}")
    rng = np.random.default_rng(seed)
    base, rem = divmod(int(total), int(classes))
    chosen = []
    for label in range(classes):
        want = base + (1 if label < rem else 0)
        pool = np.flatnonzero(labels == label)
        if pool.size < want:
            raise ValueError(
                f"class {label} has only {pool.size} samples, need {want}"
            )
        chosen.append(rng.choice(pool, size=want, replace=False))
    return np.sort(np.concatenate(chosen))


def take_balanced(dataset: Dataset, total: int, classes: int, seed: int) -> Dataset:
    """Select a seeded class-balanced subset of `total` samples.

    Only labels 0..classes-1 participate.  The first (total mod classes)
    classes contribute ceil(total/classes) samples and the rest one fewer,
    so per-class counts differ by at most one and sum to `total`.  Selected
    indices are emitted in ascending dataset order, making the result a pure
    function of (dataset, total, classes, seed).
    """
    order = _balanced_indices(dataset.labels, total, classes, seed)
    return Dataset(dataset.images[order], dataset.labels[order])


def take_holdout(dataset: Dataset, total: int, classes: int, seed: int) -> Dataset:
    """Everything take_balanced(total, classes, seed) would leave behind,
    restricted to labels 0..classes-1.

    Recomputing the selection from the same arguments makes the holdout
    disjoint from the training subset by construction, with no second
    sampling step that could collide with it.
    """
    selected = _balanced_indices(dataset.labels, total, classes, seed)
    mask = np.ones(len(dataset), dtype=bool)
    mask[selected] = False
    mask &= dataset.labels < classes
    keep = np.flatnonzero(mask)
    if keep.size == 0:
        raise ValueError(
            f"no samples left over after selecting {total} from {classes} classes"
        )
    return Dataset(dataset.images[keep], dataset.labels[keep])

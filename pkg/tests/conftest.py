"""Shared fixtures: a small MNIST-format corpus written from sklearn's digits.

The 8x8 digit images are blown up to 28x28 and serialized through the
package's own IDX writers, so training and CLI tests exercise the same
ingestion path as real MNIST files without any network access.
"""

import gzip

import numpy as np
import pytest
from sklearn.datasets import load_digits

from cvqnn.dataio import serialize_idx_images, serialize_idx_labels


def upsampled_digit_arrays():
    digits = load_digits()
    big = np.kron(digits.images, np.ones((7, 7)))
    pooled = big.reshape(-1, 28, 2, 28, 2).mean(axis=(2, 4))
    # intensities 0..16 rescaled onto the 0..255 byte range
    scaled = np.rint(pooled * (255.0 / 16.0)).astype(np.uint8)
    return scaled.reshape(-1, 784), digits.target.astype(int)


@pytest.fixture(scope="session")
def mnist_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("mnist")
    images, labels = upsampled_digit_arrays()
    image_bytes = serialize_idx_images(images / 255.0)
    label_bytes = serialize_idx_labels(labels)
    # one gzipped and one plain file, covering both accepted encodings
    (root / "train-images-idx3-ubyte.gz").write_bytes(gzip.compress(image_bytes))
    (root / "train-labels-idx1-ubyte").write_bytes(label_bytes)
    return root

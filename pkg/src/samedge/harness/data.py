"""Datasets: a synthetic Gaussian mixture and the IDX binary format used by MNIST."""

import struct
from dataclasses import dataclass

import numpy as np

from samedge.errors import ContractViolation

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray   # n x p
    targets: np.ndarray  # n x q
    labels: np.ndarray   # n integer class ids

    @property
    def n(self):
        return self.inputs.shape[0]


def _read_header(fh, path, expected_magic, extra):
    raw = fh.read(4 * (2 + extra))
    if len(raw) < 4 * (2 + extra):
        raise IdxFormatError(f"{path}: truncated header")
    magic, count, *dims = struct.unpack(f">{2 + extra}I", raw)
    if magic != expected_magic:
        raise IdxFormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    return count, dims


def read_idx_images(path):
    """``uint8`` array of shape ``(count, rows, cols)``."""
    with open(path, "rb") as fh:
        count, (rows, cols) = _read_header(fh, path, IDX_IMAGES_MAGIC, 2)
        body = fh.read()
    if len(body) < count * rows * cols:
        raise IdxFormatError(f"{path}: truncated, expected {count * rows * cols} pixel bytes")
    return np.frombuffer(body, dtype=np.uint8, count=count * rows * cols).reshape(count, rows, cols)


def read_idx_labels(path):
    with open(path, "rb") as fh:
        count, _ = _read_header(fh, path, IDX_LABELS_MAGIC, 0)
        body = fh.read()
    if len(body) < count:
        raise IdxFormatError(f"{path}: truncated, expected {count} label bytes")
    return np.frombuffer(body, dtype=np.uint8, count=count)


def write_idx_images(path, images):
    images = np.asarray(images, dtype=np.uint8)
    count, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4I", IDX_IMAGES_MAGIC, count, rows, cols))
        fh.write(images.tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">2I", IDX_LABELS_MAGIC, labels.size))
        fh.write(labels.tobytes())


def mixture_means(classes, input_dim, separation):
    """Class means spaced evenly on a circle of radius ``separation`` in the first
    two coordinates (for two classes: ``+-separation * e_1``)."""
    angles = 2.0 * np.pi * np.arange(classes) / classes
    means = np.zeros((classes, input_dim))
    means[:, 0] = np.cos(angles)
    if input_dim > 1:
        means[:, 1] = np.sin(angles)
    return separation * means


def _targets(labels, spec):
    if spec.one_hot:
        return np.eye(spec.classes)[labels]
    return labels.astype(np.float64)[:, None]


def load_dataset(spec, seed=0):
    """Materialise ``spec``.  IDX pixels are scaled by 1/255 before centering;
    only the first ``spec.n`` examples are kept."""
    if spec.source == "synthetic_gaussian_mixture":
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, spec.classes, size=spec.n)
        means = mixture_means(spec.classes, spec.input_dim, spec.separation)
        inputs = means[labels] + spec.noise * rng.standard_normal((spec.n, spec.input_dim))
    elif spec.source == "idx_files":
        images = read_idx_images(spec.images)
        all_labels = read_idx_labels(spec.labels)
        if images.shape[0] != all_labels.size:
            raise IdxFormatError(
                f"image count {images.shape[0]} does not match label count {all_labels.size}")
        if spec.n > images.shape[0]:
            raise IdxFormatError(f"requested {spec.n} examples, files hold {images.shape[0]}")
        labels = all_labels[:spec.n].astype(np.int64)
        if labels.size and labels.max() >= spec.classes:
            raise IdxFormatError(f"label {labels.max()} out of range for {spec.classes} classes")
        inputs = images[:spec.n].reshape(spec.n, -1).astype(np.float64) / 255.0
        if inputs.shape[1] != spec.input_dim:
            raise IdxFormatError(
                f"images have {inputs.shape[1]} pixels, data.input_dim is {spec.input_dim}")
    else:
        raise ContractViolation(f"unknown data source {spec.source!r}")
    if spec.center:
        inputs = inputs - inputs.mean(axis=0)
    return Dataset(inputs=inputs, targets=_targets(labels, spec), labels=labels)

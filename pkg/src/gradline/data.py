"""Datasets: IDX file loading and synthetic noisy landscapes.

The IDX routines read the classic big-endian image/label format (magic
2051 for images, 2049 for labels), transparently decompressing gzip files.
Synthetic problems expose the same duck-typed surface the oracle expects,
plus the exact full-batch optimum for convergence checks.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


def _read_all(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def read_idx_images(path) -> np.ndarray:
    """Parse an IDX image file into a (n, rows, cols) uint8 array."""
    raw = _read_all(path)
    if len(raw) < 16:
        raise DataError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n, rows, cols = struct.unpack(">llll", raw[:16])
    if magic != IMAGE_MAGIC:
        raise DataError(f"{path}: bad magic {magic}, expected {IMAGE_MAGIC}")
    want = 16 + n * rows * cols
    if len(raw) != want:
        raise DataError(f"{path}: expected {want} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(n, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    """Parse an IDX label file into a (n,) uint8 array."""
    raw = _read_all(path)
    if len(raw) < 8:
        raise DataError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, n = struct.unpack(">ll", raw[:8])
    if magic != LABEL_MAGIC:
        raise DataError(f"{path}: bad magic {magic}, expected {LABEL_MAGIC}")
    if len(raw) != 8 + n:
        raise DataError(f"{path}: expected {8 + n} bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8, offset=8)


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.ascontiguousarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">llll", IMAGE_MAGIC, n, rows, cols))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">ll", LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


@dataclass
class Dataset:
    """Flattened inputs in [0, 1] with integer class labels."""

    inputs: np.ndarray
    labels: np.ndarray
    split: str = "train"

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    def subset(self, n: int) -> "Dataset":
        """First n samples, a reproducible stand-in for the full split."""
        if not 1 <= n <= self.n_samples:
            raise ValueError(f"subset size must be in [1, {self.n_samples}], got {n}")
        return Dataset(self.inputs[:n], self.labels[:n], self.split)


def load_idx(image_path, label_path, split="train", dtype=np.float64) -> Dataset:
    """Load and cross-check an IDX image/label pair.

    Pixels are scaled to [0, 1] and images flattened to rows.
    """
    images = read_idx_images(image_path)
    labels = read_idx_labels(label_path)
    if images.shape[0] != labels.shape[0]:
        raise DataError(
            f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels"
        )
    inputs = images.reshape(images.shape[0], -1).astype(dtype) / 255.0
    return Dataset(inputs, labels.astype(np.int64), split)


_MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


def _resolve(directory: Path, name: str) -> Path:
    for candidate in (directory / name, directory / (name + ".gz")):
        if candidate.exists():
            return candidate
    raise DataError(f"missing dataset file {name}[.gz] in {directory}")


def load_mnist(data_dir, split: str, dtype=np.float64) -> Dataset:
    """Load one MNIST split from a directory of (optionally gzipped) IDX files."""
    if split not in _MNIST_FILES:
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    directory = Path(data_dir)
    image_name, label_name = _MNIST_FILES[split]
    return load_idx(
        _resolve(directory, image_name),
        _resolve(directory, label_name),
        split=split,
        dtype=dtype,
    )


# ---- synthetic landscapes ----


@dataclass
class NoisyQuadratic1D:
    """Scalar landscape with per-sample loss (x - t_b)^2.

    The targets t_b are drawn once at construction; mini-batch means of
    them move the apparent minimum around, which makes this the smallest
    landscape where sign-change line searches differ from minimisers.
    """

    targets: np.ndarray
    full_batch_optimum: float = field(init=False)

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=np.float64)
        self.full_batch_optimum = float(self.targets.mean())

    @property
    def n_samples(self) -> int:
        return self.targets.shape[0]

    def sample_losses(self, x, indices) -> np.ndarray:
        return (x[0] - self.targets[indices]) ** 2

    def batch_loss(self, x, indices) -> float:
        return float(self.sample_losses(x, indices).mean())

    def batch_loss_grad(self, x, indices):
        diffs = x[0] - self.targets[indices]
        loss = float((diffs * diffs).mean())
        grad = np.array([2.0 * diffs.mean()])
        return loss, grad

    def full_loss(self, x) -> float:
        return self.batch_loss(x, slice(None))


def make_noisy_quadratic(mu: float, sigma: float, n_samples: int, seed=None) -> NoisyQuadratic1D:
    """Targets t_b ~ Normal(mu, sigma^2); sigma=0 collapses to a clean quadratic."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    rng = np.random.default_rng(seed)
    targets = mu + sigma * rng.standard_normal(n_samples)
    return NoisyQuadratic1D(targets)


@dataclass
class NoisyBowlND:
    """Vector landscape with per-sample loss 0.5 * ||x - t_b||^2."""

    centers: np.ndarray
    full_batch_optimum: np.ndarray = field(init=False)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64)
        if self.centers.ndim != 2:
            raise ValueError("centers must be (n_samples, dim)")
        self.full_batch_optimum = self.centers.mean(axis=0)

    @property
    def n_samples(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def sample_losses(self, x, indices) -> np.ndarray:
        diffs = x[None, :] - self.centers[indices]
        return 0.5 * (diffs * diffs).sum(axis=1)

    def batch_loss(self, x, indices) -> float:
        return float(self.sample_losses(x, indices).mean())

    def batch_loss_grad(self, x, indices):
        sub = self.centers[indices]
        diffs = x[None, :] - sub
        loss = 0.5 * float((diffs * diffs).sum(axis=1).mean())
        grad = x - sub.mean(axis=0)
        return loss, grad

    def full_loss(self, x) -> float:
        return self.batch_loss(x, slice(None))


def make_noisy_bowl(center, sigma: float, n_samples: int, seed=None) -> NoisyBowlND:
    """Sample centers t_b ~ Normal(center, sigma^2 I)."""
    center = np.asarray(center, dtype=np.float64)
    if center.ndim != 1:
        raise ValueError("center must be a vector")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    rng = np.random.default_rng(seed)
    centers = center[None, :] + sigma * rng.standard_normal((n_samples, center.shape[0]))
    return NoisyBowlND(centers)

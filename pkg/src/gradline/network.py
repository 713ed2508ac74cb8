"""Feed-forward network with tanh hidden layers and a mean-squared-error
objective against one-hot targets.

Parameters live in one flat vector so the whole network can be driven by
generic vector-space line searches.  The layout is, per layer, the weight
matrix in row-major order followed by the bias vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MlpArchitecture:
    """Layer widths from input to output, e.g. (784, 1000, 500, 250, 10)."""

    layer_sizes: tuple[int, ...]
    dtype: np.dtype = np.dtype(np.float64)

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        if any(int(n) < 1 for n in self.layer_sizes):
            raise ValueError(f"layer sizes must be positive, got {self.layer_sizes}")
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))
        object.__setattr__(self, "dtype", np.dtype(self.dtype))

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def n_params(self) -> int:
        return sum(fi * fo + fo for fi, fo in zip(self.layer_sizes, self.layer_sizes[1:]))


def param_layout(arch: MlpArchitecture):
    """Per-layer (weight_slice, (fan_in, fan_out), bias_slice) into the flat vector."""
    layout = []
    offset = 0
    for fi, fo in zip(arch.layer_sizes, arch.layer_sizes[1:]):
        w = slice(offset, offset + fi * fo)
        offset += fi * fo
        b = slice(offset, offset + fo)
        offset += fo
        layout.append((w, (fi, fo), b))
    return layout


def xavier_init(arch: MlpArchitecture, rng: np.random.Generator) -> np.ndarray:
    """Weights ~ U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases zero."""
    params = np.zeros(arch.n_params, dtype=arch.dtype)
    for w, (fi, fo), _ in param_layout(arch):
        bound = np.sqrt(6.0 / (fi + fo))
        params[w] = rng.uniform(-bound, bound, fi * fo).astype(arch.dtype)
    return params


def forward(arch: MlpArchitecture, params: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Network outputs for a batch of flattened inputs.

    Hidden layers apply tanh; the output layer is affine, which keeps the
    squared-error gradient linear in the final-layer activations.
    """
    layout = param_layout(arch)
    if inputs.ndim != 2 or inputs.shape[1] != arch.layer_sizes[0]:
        raise ValueError(
            f"inputs must be (batch, {arch.layer_sizes[0]}), got {inputs.shape}"
        )
    a = inputs
    for i, (w, (fi, fo), b) in enumerate(layout):
        z = a @ params[w].reshape(fi, fo) + params[b]
        a = z if i == len(layout) - 1 else np.tanh(z)
    return a


def one_hot(labels: np.ndarray, n_classes: int, dtype=np.float64) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(f"labels out of range [0, {n_classes})")
    out = np.zeros((labels.shape[0], n_classes), dtype=dtype)
    out[np.arange(labels.shape[0]), labels] = 1
    return out


def loss_and_grad(arch: MlpArchitecture, params: np.ndarray, inputs: np.ndarray,
                  targets: np.ndarray):
    """Batch MSE and its gradient as one flat vector.

    The loss is the mean squared error over every sample and output unit,
    i.e. the mean of per-sample losses where a sample's loss is the mean
    over output units.  Returns (loss, grad) with grad.shape == params.shape.
    """
    layout = param_layout(arch)
    activations = [inputs]
    a = inputs
    for i, (w, (fi, fo), b) in enumerate(layout):
        z = a @ params[w].reshape(fi, fo) + params[b]
        a = z if i == len(layout) - 1 else np.tanh(z)
        activations.append(a)

    batch, n_out = activations[-1].shape
    err = activations[-1] - targets
    loss = float((err * err).mean())

    grad = np.zeros_like(params)
    delta = (2.0 / (batch * n_out)) * err
    for i in range(len(layout) - 1, -1, -1):
        w, (fi, fo), b = layout[i]
        grad[w] = (activations[i].T @ delta).ravel()
        grad[b] = delta.sum(axis=0)
        if i > 0:
            # tanh' = 1 - tanh^2, using the stored activation
            delta = (delta @ params[w].reshape(fi, fo).T) * (1.0 - activations[i] ** 2)
    return loss, grad


def evaluate_metrics(arch: MlpArchitecture, params: np.ndarray, inputs: np.ndarray,
                     labels: np.ndarray, chunk: int = 2048):
    """(mse, accuracy) over a whole split, forward passes only, chunked."""
    n = inputs.shape[0]
    n_out = arch.layer_sizes[-1]
    sq_sum = 0.0
    hits = 0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        out = forward(arch, params, inputs[lo:hi])
        t = one_hot(labels[lo:hi], n_out, dtype=out.dtype)
        err = out - t
        sq_sum += float((err * err).sum())
        hits += int((out.argmax(axis=1) == labels[lo:hi]).sum())
    return sq_sum / (n * n_out), hits / n


class MlpProblem:
    """Adapter exposing the network as an oracle problem over a dataset."""

    def __init__(self, arch: MlpArchitecture, inputs: np.ndarray, labels: np.ndarray):
        if inputs.shape[1] != arch.layer_sizes[0]:
            raise ValueError(
                f"inputs have {inputs.shape[1]} features, network expects "
                f"{arch.layer_sizes[0]}"
            )
        self.arch = arch
        self.inputs = np.ascontiguousarray(inputs, dtype=arch.dtype)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.targets = one_hot(self.labels, arch.layer_sizes[-1], dtype=arch.dtype)

    @property
    def n_samples(self) -> int:
        return self.inputs.shape[0]

    def batch_loss_grad(self, x, indices):
        return loss_and_grad(self.arch, x, self.inputs[indices], self.targets[indices])

    def batch_loss(self, x, indices) -> float:
        out = forward(self.arch, x, self.inputs[indices])
        err = out - self.targets[indices]
        return float((err * err).mean())

    def sample_losses(self, x, indices) -> np.ndarray:
        out = forward(self.arch, x, self.inputs[indices])
        err = out - self.targets[indices]
        return (err * err).mean(axis=1)

"""Stochastic loss oracle with dynamic mini-batch sub-sampling.

Every fresh evaluation draws a new mini-batch, so the loss observed along
a fixed search direction is point-wise discontinuous: two evaluations at
the same step size generally disagree.  Line searches built on top of this
oracle therefore work with directional derivative signs rather than loss
magnitudes.

Problems plug in through a small duck-typed surface:

    problem.n_samples                    -> int
    problem.batch_loss_grad(x, indices)  -> (loss, grad)
    problem.batch_loss(x, indices)       -> loss            (optional)
    problem.sample_losses(x, indices)    -> per-sample loss (optional,
                                            used to locate bad samples)

The batch loss is the plain mean of per-sample losses over the given
indices, and the batch gradient is the mean of per-sample gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BudgetExhaustedError, NonFiniteLossError


def sample_batch(dataset_size: int, batch_size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``batch_size`` unique indices uniformly without replacement.

    Successive calls with the same rng are independent draws.  Indices come
    back sorted, so a full batch is always the identity sequence and
    full-batch oracles stay bitwise deterministic.
    """
    if batch_size < 1 or batch_size > dataset_size:
        raise ValueError(
            f"batch_size must be in [1, {dataset_size}], got {batch_size}"
        )
    if batch_size == dataset_size:
        return np.arange(dataset_size)
    # random-keys draw: argpartition of iid uniforms yields a uniform
    # batch_size-subset at O(n) instead of rng.choice's O(n log n)
    keys = rng.random(dataset_size)
    idx = np.argpartition(keys, batch_size)[:batch_size]
    idx.sort()
    return idx


@dataclass(frozen=True)
class DirectionalSlice:
    """The 1-D restriction of the loss to ``origin + alpha * direction``."""

    origin: np.ndarray
    direction: np.ndarray
    alpha: float = 0.0

    def __post_init__(self):
        if self.origin.shape != self.direction.shape:
            raise ValueError("origin and direction must have the same shape")
        if not np.any(self.direction):
            raise ValueError("direction must be non-zero")
        if not self.alpha >= 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    def point(self) -> np.ndarray:
        return self.origin + self.alpha * self.direction

    def at(self, alpha: float) -> "DirectionalSlice":
        """Same slice, different step size."""
        return DirectionalSlice(self.origin, self.direction, alpha)


class FreshEvaluation(NamedTuple):
    loss: float
    gradient: np.ndarray
    dderiv: float
    eval_id: int


class StochasticOracle:
    """Mini-batch loss oracle that re-samples on every fresh evaluation.

    One oracle serves one training run.  It owns the batch RNG and the
    evaluation counter, which is the budget unit for every benchmark: one
    count per fresh gradient computation.  Explicit-batch helpers
    (``loss_at``, ``grad_at``, ``dderiv_along``) do not draw batches and do
    not count; they exist for metric passes and for tests that pin a batch.

    When ``batch_size == problem.n_samples`` every draw returns the whole
    set and the oracle is deterministic.
    """

    def __init__(self, problem, batch_size: int, seed=None, rng=None, max_evals=None):
        n = int(problem.n_samples)
        if batch_size < 1 or batch_size > n:
            raise ValueError(f"batch_size must be in [1, {n}], got {batch_size}")
        if max_evals is not None and max_evals < 1:
            raise ValueError(f"max_evals must be >= 1, got {max_evals}")
        self.problem = problem
        self.batch_size = int(batch_size)
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.max_evals = max_evals
        self.evals = 0

    @property
    def deterministic(self) -> bool:
        return self.batch_size == int(self.problem.n_samples)

    def sample_batch(self) -> np.ndarray:
        return sample_batch(int(self.problem.n_samples), self.batch_size, self.rng)

    # ---- explicit-batch helpers (uncounted) ----

    def loss_at(self, x: np.ndarray, batch: np.ndarray) -> float:
        fn = getattr(self.problem, "batch_loss", None)
        if fn is not None:
            loss = fn(x, batch)
        else:
            loss, _ = self.problem.batch_loss_grad(x, batch)
        if not np.isfinite(loss):
            self._raise_non_finite(x, batch, loss)
        return float(loss)

    def grad_at(self, x: np.ndarray, batch: np.ndarray) -> np.ndarray:
        loss, grad = self.problem.batch_loss_grad(x, batch)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            self._raise_non_finite(x, batch, loss)
        return grad

    def dderiv_along(self, slc: DirectionalSlice, batch: np.ndarray) -> float:
        g = self.grad_at(slc.point(), batch)
        return float(slc.direction @ g)

    # ---- fresh, counted evaluations ----

    def evaluate_fresh_at(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Loss and gradient at x on a freshly drawn batch.  Counts one eval."""
        if self.max_evals is not None and self.evals >= self.max_evals:
            raise BudgetExhaustedError(
                f"evaluation budget of {self.max_evals} exhausted"
            )
        batch = self.sample_batch()
        loss, grad = self.problem.batch_loss_grad(x, batch)
        if not np.isfinite(loss):
            self._raise_non_finite(x, batch, loss)
        self.evals += 1
        return float(loss), grad

    def evaluate_fresh(self, slc: DirectionalSlice) -> FreshEvaluation:
        """Loss, gradient, and directional derivative at ``slc.point()``.

        The derivative is direction . gradient with both taken on the same
        batch, so the triple is internally consistent even though the next
        call will disagree with it.
        """
        loss, grad = self.evaluate_fresh_at(slc.point())
        dderiv = float(slc.direction @ grad)
        if not np.isfinite(dderiv):
            self._raise_non_finite(slc.point(), None, loss)
        return FreshEvaluation(loss, grad, dderiv, self.evals)

    def _raise_non_finite(self, x, batch, loss):
        sample_index = None
        fn = getattr(self.problem, "sample_losses", None)
        if fn is not None and batch is not None:
            per = np.asarray(fn(x, batch))
            bad = np.flatnonzero(~np.isfinite(per))
            if bad.size:
                sample_index = int(np.asarray(batch)[bad[0]])
        where = f" (first bad sample: {sample_index})" if sample_index is not None else ""
        raise NonFiniteLossError(
            f"non-finite evaluation after {self.evals} oracle calls, loss={loss}{where}",
            sample_index=sample_index,
        )

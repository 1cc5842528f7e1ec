"""Finite-difference verification of tape gradients.

The numeric side never touches the tape's backward pass: it re-evaluates the
forward function at shifted inputs, so agreement between the two is a real
cross-check rather than a tautology.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor

# Loss builders take freshly wrapped leaf tensors and return a scalar Tensor.
LossBuilder = Callable[[Sequence[Tensor]], Tensor]


def numeric_gradients(
    f: Callable[[Sequence[np.ndarray]], float],
    arrays: Sequence[np.ndarray],
    step: float = 1e-5,
) -> list[np.ndarray]:
    """Central finite differences of ``f`` at ``arrays``, one entry at a time."""
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    grads = [np.zeros_like(a) for a in arrays]
    for ai, a in enumerate(arrays):
        flat = a.reshape(-1)
        gflat = grads[ai].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = f(arrays)
            flat[i] = orig - step
            fm = f(arrays)
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * step)
    return grads


def max_relative_error(
    build: LossBuilder,
    arrays: Sequence[np.ndarray],
    step: float = 1e-5,
) -> float:
    """Worst-case relative error between tape and finite-difference gradients.

    The error for each input array is ``max|tape - numeric|`` scaled by the
    largest gradient magnitude seen for that array (absolute error when both
    sides are essentially zero).
    """
    leaves = [Tensor(a) for a in arrays]
    loss = build(leaves)
    loss.backward()

    def forward(arrs: Sequence[np.ndarray]) -> float:
        return float(build([Tensor(a) for a in arrs]).data)

    numeric = numeric_gradients(forward, arrays, step=step)
    worst = 0.0
    for leaf, num in zip(leaves, numeric):
        tape = leaf.grad if leaf.grad is not None else np.zeros_like(num)
        # gradients below the floor are indistinguishable from central-difference
        # noise (~1e-11 at step 1e-5), so the comparison switches to absolute there
        scale = max(np.abs(tape).max(), np.abs(num).max(), 1e-6)
        worst = max(worst, float(np.abs(tape - num).max() / scale))
    return worst


def assert_gradients_match(
    build: LossBuilder,
    arrays: Sequence[np.ndarray],
    step: float = 1e-5,
    rtol: float = 1e-4,
) -> float:
    err = max_relative_error(build, arrays, step=step)
    if err > rtol:
        raise AssertionError(
            f"tape gradients disagree with finite differences: "
            f"relative error {err:.3e} > {rtol:.1e}"
        )
    return err

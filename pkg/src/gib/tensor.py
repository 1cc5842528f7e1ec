"""Dense float64 tensors with reverse-mode automatic differentiation.

Every differentiable quantity in this package is a :class:`Tensor` wrapping a
64-bit numpy array. Operations record their inputs and a local-gradient
closure on the fly (define-by-run), so each forward pass builds a fresh tape.
``Tensor.backward()`` replays the tape in reverse topological order and
accumulates exact chain-rule gradients into ``.grad`` buffers.

Design points:
  * float64 everywhere; gradient checks against central finite differences
    need the precision, and nothing here is large enough to want float32.
  * relu subgradient at exactly 0 is 0.
  * Dense arrays only; the graphs handled here have tens of nodes.
  * Broadcasting in add/sub/mul follows numpy; gradients of broadcast
    operands are reduce-summed back to the operand shape.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np


class ShapeMismatch(ValueError):
    """Raised when operand shapes are incompatible for an operation."""


class Tensor:
    """A node of the computation tape: value, gradient buffer, parents."""

    __slots__ = ("data", "grad", "parents", "grad_fn", "op")

    def __init__(
        self,
        values,
        parents: tuple[Tensor, ...] = (),
        grad_fn: Optional[Callable[[np.ndarray], None]] = None,
        op: str = "leaf",
    ):
        self.data = np.asarray(values, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.parents = parents
        self.grad_fn = grad_fn
        self.op = op

    # -- bookkeeping ------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatch(f"item() needs a scalar, got shape {self.data.shape}")
        return float(self.data)

    def __float__(self) -> float:
        return self.item()

    def __repr__(self) -> str:
        return f"Tensor(op={self.op!r}, shape={self.data.shape})"

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def tape(self) -> list[Tensor]:
        """All nodes reachable from this one, in topological order.

        Every node's parents appear before the node itself, so iterating the
        reversed list during backward visits each op after all its consumers.
        """
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in reversed(node.parents):
                if id(p) not in seen:
                    stack.append((p, False))
        return order

    def backward(self) -> None:
        """Populate ``.grad`` of every tensor this scalar loss depends on."""
        if self.data.size != 1:
            raise ShapeMismatch(
                f"backward() requires a scalar loss, got shape {self.data.shape}"
            )
        order = self.tape()
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node.grad_fn is not None and node.grad is not None:
                node.grad_fn(node.grad)

    # -- operator sugar ---------------------------------------------------

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    @property
    def T(self) -> Tensor:
        return transpose(self)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce-sum a broadcast gradient back to the original operand shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _check_broadcastable(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.data.shape, b.data.shape)
    except ValueError:
        raise ShapeMismatch(
            f"{op}: shapes {a.data.shape} and {b.data.shape} do not broadcast"
        ) from None


# -- elementwise arithmetic -------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcastable(a, b, "add")
    out = Tensor(a.data + b.data, (a, b), op="add")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(g, b.data.shape))

    out.grad_fn = grad_fn
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcastable(a, b, "sub")
    out = Tensor(a.data - b.data, (a, b), op="sub")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(_unbroadcast(g, a.data.shape))
        b._accumulate(_unbroadcast(-g, b.data.shape))

    out.grad_fn = grad_fn
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcastable(a, b, "mul")
    out = Tensor(a.data * b.data, (a, b), op="mul")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    out.grad_fn = grad_fn
    return out


def neg(a: Tensor) -> Tensor:
    out = Tensor(-a.data, (a,), op="neg")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(-g)

    out.grad_fn = grad_fn
    return out


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0.0), (a,), op="relu")
    mask = (a.data > 0.0).astype(np.float64)  # subgradient at 0 is 0

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(g * mask)

    out.grad_fn = grad_fn
    return out


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    out = Tensor(y, (a,), op="tanh")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(g * (1.0 - y * y))

    out.grad_fn = grad_fn
    return out


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.data)
    out = Tensor(y, (a,), op="exp")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(g * y)

    out.grad_fn = grad_fn
    return out


def log(a: Tensor) -> Tensor:
    if np.any(a.data <= 0.0):
        raise ValueError("log: input must be strictly positive")
    out = Tensor(np.log(a.data), (a,), op="log")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(g / a.data)

    out.grad_fn = grad_fn
    return out


# -- matrix ops --------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeMismatch(
            f"matmul: expected 2-d operands, got {a.data.shape} and {b.data.shape}"
        )
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeMismatch(
            f"matmul: inner dimensions disagree, {a.data.shape} x {b.data.shape}"
        )
    out = Tensor(a.data @ b.data, (a, b), op="matmul")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    out.grad_fn = grad_fn
    return out


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeMismatch(f"transpose: expected a matrix, got {a.data.shape}")
    out = Tensor(a.data.T.copy(), (a,), op="transpose")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(g.T)

    out.grad_fn = grad_fn
    return out


def row(a: Tensor, i: int) -> Tensor:
    """Row ``i`` of a matrix as a 1 x d tensor."""
    if a.data.ndim != 2:
        raise ShapeMismatch(f"row: expected a matrix, got {a.data.shape}")
    out = Tensor(a.data[i : i + 1, :].copy(), (a,), op="row")

    def grad_fn(g: np.ndarray) -> None:
        buf = np.zeros_like(a.data)
        buf[i : i + 1, :] = g
        a._accumulate(buf)

    out.grad_fn = grad_fn
    return out


def pick(a: Tensor, i: int, j: int) -> Tensor:
    """Single entry of a matrix as a scalar tensor."""
    if a.data.ndim != 2:
        raise ShapeMismatch(f"pick: expected a matrix, got {a.data.shape}")
    out = Tensor(a.data[i, j], (a,), op="pick")

    def grad_fn(g: np.ndarray) -> None:
        buf = np.zeros_like(a.data)
        buf[i, j] = g
        a._accumulate(buf)

    out.grad_fn = grad_fn
    return out


def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    """Stack 1 x d (or m x d) tensors vertically."""
    parts = list(parts)
    if not parts:
        raise ShapeMismatch("concat_rows: need at least one tensor")
    width = parts[0].data.shape[1]
    for p in parts:
        if p.data.ndim != 2 or p.data.shape[1] != width:
            raise ShapeMismatch(
                f"concat_rows: widths disagree, {p.data.shape} vs (:, {width})"
            )
    out = Tensor(np.concatenate([p.data for p in parts], axis=0), tuple(parts), op="concat_rows")
    sizes = [p.data.shape[0] for p in parts]

    def grad_fn(g: np.ndarray) -> None:
        offset = 0
        for p, m in zip(parts, sizes):
            p._accumulate(g[offset : offset + m, :])
            offset += m

    out.grad_fn = grad_fn
    return out


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    """Stack m x d tensors horizontally."""
    parts = list(parts)
    if not parts:
        raise ShapeMismatch("concat_cols: need at least one tensor")
    height = parts[0].data.shape[0]
    for p in parts:
        if p.data.ndim != 2 or p.data.shape[0] != height:
            raise ShapeMismatch(
                f"concat_cols: heights disagree, {p.data.shape} vs ({height}, :)"
            )
    out = Tensor(np.concatenate([p.data for p in parts], axis=1), tuple(parts), op="concat_cols")
    sizes = [p.data.shape[1] for p in parts]

    def grad_fn(g: np.ndarray) -> None:
        offset = 0
        for p, m in zip(parts, sizes):
            p._accumulate(g[:, offset : offset + m])
            offset += m

    out.grad_fn = grad_fn
    return out


# -- row-wise normalizers ----------------------------------------------------


def row_softmax(a: Tensor) -> Tensor:
    """Softmax over each row, stabilized by max subtraction."""
    if a.data.ndim != 2:
        raise ShapeMismatch(f"row_softmax: expected a matrix, got {a.data.shape}")
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)
    out = Tensor(y, (a,), op="row_softmax")

    def grad_fn(g: np.ndarray) -> None:
        # dL/dx = y * (g - sum_j g_j y_j) per row
        dot = (g * y).sum(axis=1, keepdims=True)
        a._accumulate(y * (g - dot))

    out.grad_fn = grad_fn
    return out


def row_l1_normalize(a: Tensor) -> Tensor:
    """Divide each row by its sum; an all-zero row stays an all-zero row.

    Intended for nonnegative matrices (row sums are taken verbatim, not as
    absolute values). The zero-row case carries zero gradient: the normalized
    zero row is treated as a constant.
    """
    if a.data.ndim != 2:
        raise ShapeMismatch(f"row_l1_normalize: expected a matrix, got {a.data.shape}")
    if np.any(a.data < 0.0):
        raise ValueError("row_l1_normalize: input must be nonnegative")
    s = a.data.sum(axis=1, keepdims=True)
    nonzero = s != 0.0
    safe = np.where(nonzero, s, 1.0)
    y = np.where(nonzero, a.data / safe, 0.0)
    out = Tensor(y, (a,), op="row_l1_normalize")

    def grad_fn(g: np.ndarray) -> None:
        dot = (g * y).sum(axis=1, keepdims=True)
        a._accumulate(np.where(nonzero, (g - dot) / safe, 0.0))

    out.grad_fn = grad_fn
    return out


# -- reductions ----------------------------------------------------------------


def _require_nonempty(a: Tensor, op: str) -> None:
    if a.data.size == 0:
        raise ShapeMismatch(f"{op}: empty tensor")


def tsum(a: Tensor) -> Tensor:
    _require_nonempty(a, "sum")
    out = Tensor(a.data.sum(), (a,), op="sum")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(np.full_like(a.data, float(g)))

    out.grad_fn = grad_fn
    return out


def tmean(a: Tensor) -> Tensor:
    _require_nonempty(a, "mean")
    n = a.data.size
    out = Tensor(a.data.mean(), (a,), op="mean")

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(np.full_like(a.data, float(g) / n))

    out.grad_fn = grad_fn
    return out


def frobenius_norm(a: Tensor) -> Tensor:
    """sqrt(sum of squares). Subgradient at the zero matrix is 0."""
    _require_nonempty(a, "frobenius_norm")
    value = float(np.sqrt((a.data * a.data).sum()))
    out = Tensor(value, (a,), op="frobenius_norm")

    def grad_fn(g: np.ndarray) -> None:
        if value > 0.0:
            a._accumulate(float(g) * a.data / value)

    out.grad_fn = grad_fn
    return out


def logsumexp(a: Tensor) -> Tensor:
    """log(sum(exp(x))) over all entries, max-shifted for stability."""
    _require_nonempty(a, "logsumexp")
    m = a.data.max()
    e = np.exp(a.data - m)
    z = e.sum()
    out = Tensor(m + np.log(z), (a,), op="logsumexp")
    soft = e / z

    def grad_fn(g: np.ndarray) -> None:
        a._accumulate(float(g) * soft)

    out.grad_fn = grad_fn
    return out


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None

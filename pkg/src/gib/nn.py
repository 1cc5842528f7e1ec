"""Layers: graph convolution, self-attentive readout, and plain MLPs.

A GCN layer propagates features through the renormalized adjacency
D^{-1/2} (A + I) D^{-1/2} (self-loops keep isolated nodes alive) followed by
a linear map and relu. The attention head scores nodes, normalizes the
scores with a softmax, and aggregates node embeddings into one graph
embedding; its scores double as the node ranking behind the top-k baseline.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .graphs import Graph
from .tensor import ShapeMismatch, Tensor


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def normalized_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I."""
    a_hat = adjacency + np.eye(adjacency.shape[0])
    d_inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


_ACTIVATIONS: dict[str, Callable[[Tensor], Tensor]] = {
    "relu": T.relu,
    "tanh": T.tanh,
    "identity": lambda t: t,
}


class GcnLayer:
    """One graph-convolution layer: relu(norm_adj @ X @ W)."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, activation: str = "relu"):
        self.weight = Tensor(glorot(rng, d_in, d_out))
        self.activation = activation

    def forward(self, norm_adj: Tensor, x: Tensor) -> Tensor:
        if x.shape[1] != self.weight.shape[0]:
            raise ShapeMismatch(
                f"gcn layer expects width {self.weight.shape[0]}, got {x.shape}"
            )
        return _ACTIVATIONS[self.activation](norm_adj @ x @ self.weight)

    def params(self) -> list[Tensor]:
        return [self.weight]


class GcnEncoder:
    """A stack of GCN layers producing node embeddings."""

    def __init__(self, widths: Sequence[int], rng: np.random.Generator):
        self.layers = [
            GcnLayer(widths[i], widths[i + 1], rng) for i in range(len(widths) - 1)
        ]

    def forward_graph(self, graph: Graph) -> Tensor:
        h = Tensor(graph.features)
        norm_adj = Tensor(normalized_adjacency(graph.adjacency))
        for layer in self.layers:
            h = layer.forward(norm_adj, h)
        return h

    def params(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.params()]

    def named_params(self, prefix: str) -> list[tuple[str, Tensor]]:
        return [
            (f"{prefix}.gcn{i}.weight", layer.weight)
            for i, layer in enumerate(self.layers)
        ]


class Mlp:
    """Affine stack with per-layer activations (last one usually identity)."""

    def __init__(
        self,
        widths: Sequence[int],
        rng: np.random.Generator,
        hidden_activation: str = "tanh",
        final_activation: str = "identity",
    ):
        if len(widths) < 2:
            raise ShapeMismatch("an Mlp needs at least an input and an output width")
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        self.activations: list[str] = []
        for i in range(len(widths) - 1):
            self.weights.append(Tensor(glorot(rng, widths[i], widths[i + 1])))
            self.biases.append(Tensor(np.zeros((1, widths[i + 1]))))
            last = i == len(widths) - 2
            self.activations.append(final_activation if last else hidden_activation)

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[1] != self.weights[0].shape[0]:
            raise ShapeMismatch(
                f"mlp expects input width {self.weights[0].shape[0]}, got {x.shape}"
            )
        h = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            h = _ACTIVATIONS[act](h @ w + b)
        return h

    def params(self) -> list[Tensor]:
        out: list[Tensor] = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def named_params(self, prefix: str) -> list[tuple[str, Tensor]]:
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"{prefix}.layer{i}.weight", w))
            out.append((f"{prefix}.layer{i}.bias", b))
        return out


class AttentionHead:
    """Self-attentive readout: softmax(tanh(X' @ P1) @ P2) over nodes."""

    def __init__(self, d: int, hidden: int, rng: np.random.Generator):
        self.p1 = Tensor(glorot(rng, d, hidden))
        self.p2 = Tensor(glorot(rng, hidden, 1))

    def forward(self, embeddings: Tensor) -> tuple[Tensor, Tensor]:
        """Returns (graph embedding 1 x d, node scores 1 x n summing to 1)."""
        if embeddings.shape[0] == 0:
            raise ValueError("attention over an empty node set")
        raw = T.tanh(embeddings @ self.p1) @ self.p2  # n x 1
        scores = T.row_softmax(T.transpose(raw))  # 1 x n
        return scores @ embeddings, scores

    def params(self) -> list[Tensor]:
        return [self.p1, self.p2]

    def named_params(self, prefix: str) -> list[tuple[str, Tensor]]:
        return [(f"{prefix}.p1", self.p1), (f"{prefix}.p2", self.p2)]


def topk_subgraph_from_scores(
    graph: Graph, scores: np.ndarray, keep_fraction: float
) -> np.ndarray:
    """Boolean mask keeping the ceil(keep_fraction * n) highest-scoring nodes.

    Ties break toward the lower node index so the selection is reproducible.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.shape[0] != graph.n:
        raise ShapeMismatch(
            f"scores length {scores.shape[0]} does not match {graph.n} nodes"
        )
    k = int(np.ceil(keep_fraction * graph.n))
    # stable sort on (-score, index) implements the index tie-break
    order = sorted(range(graph.n), key=lambda i: (-scores[i], i))
    mask = np.zeros(graph.n, dtype=bool)
    mask[order[:k]] = True
    return mask

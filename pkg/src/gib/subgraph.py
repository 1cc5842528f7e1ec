"""The subgraph generator: node assignments, embeddings, connectivity loss.

The generator runs a GCN encoder over the graph and an MLP over the node
embeddings to produce an n x 2 row-stochastic assignment S; row i holds the
probability that node i belongs to the subgraph vs its complement. The
subgraph's differentiable representation is the first row of S^T X (the
probability-weighted sum of node embeddings), and the connectivity loss
|| row_normalize(S^T A S) - I ||_F pushes assignments toward saturated 0/1
values with few edges cut between the two sides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import tensor as T
from .graphs import Graph
from .nn import GcnEncoder, Mlp
from .tensor import Tensor


class SubgraphGenerator:
    """GCN encoder (theta1) plus assignment MLP (theta2)."""

    def __init__(
        self,
        feature_dim: int,
        hidden: int,
        rng: np.random.Generator,
        gcn_layers: int = 2,
        mlp_hidden: int = 16,
    ):
        widths = [feature_dim] + [hidden] * gcn_layers
        self.encoder = GcnEncoder(widths, rng)
        self.assign_mlp = Mlp([hidden, mlp_hidden, 2], rng, hidden_activation="tanh")

    def node_embeddings(self, graph: Graph) -> Tensor:
        return self.encoder.forward_graph(graph)

    def assignment(self, graph: Graph) -> tuple[Tensor, Tensor]:
        """Returns (S, node embeddings). Rows of S sum to 1."""
        if graph.n == 0:
            raise ValueError("cannot assign nodes of an empty graph")
        x = self.node_embeddings(graph)
        s = T.row_softmax(self.assign_mlp.forward(x))
        return s, x

    def encoder_params(self) -> list[Tensor]:
        return self.encoder.params()

    def mlp_params(self) -> list[Tensor]:
        return self.assign_mlp.params()

    def named_params(self) -> list[tuple[str, Tensor]]:
        return self.encoder.named_params("generator.encoder") + self.assign_mlp.named_params(
            "generator.assign"
        )


def subgraph_embedding(assignment: Tensor, node_embeddings: Tensor) -> Tensor:
    """First row of S^T X: the probability-weighted sum of node embeddings."""
    return T.row(T.transpose(assignment) @ node_embeddings, 0)


def complement_embedding(assignment: Tensor, node_embeddings: Tensor) -> Tensor:
    """Second row of S^T X: the complement side's representation."""
    return T.row(T.transpose(assignment) @ node_embeddings, 1)


def connectivity_loss(assignment: Tensor, adjacency: Tensor | np.ndarray) -> Tensor:
    """|| row_normalize(S^T A S) - I_2 ||_F.

    Row normalization divides by the row sum; an all-zero row (one side has
    no incident edge mass at all) stays zero, which puts it at distance 1
    from the identity row and penalizes collapsing every node to one side.
    """
    adj = adjacency if isinstance(adjacency, Tensor) else Tensor(adjacency)
    quad = T.transpose(assignment) @ adj @ assignment
    normalized = T.row_l1_normalize(quad)
    return T.frobenius_norm(normalized - Tensor(np.eye(2)))


@dataclass
class SubgraphSelection:
    """A hard node selection with the adjacency it induces."""

    node_mask: np.ndarray
    induced_adjacency: np.ndarray
    threshold: float

    @property
    def empty(self) -> bool:
        return not bool(self.node_mask.any())

    def node_indices(self) -> list[int]:
        return np.nonzero(self.node_mask)[0].tolist()


def discretize(
    assignment: np.ndarray | Tensor, graph: Graph, threshold: float = 0.5
) -> SubgraphSelection:
    """Select node i iff its subgraph probability is >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    s = assignment.data if isinstance(assignment, Tensor) else np.asarray(assignment)
    mask = s[:, 0] >= threshold
    induced = graph.adjacency * np.outer(mask, mask)
    return SubgraphSelection(node_mask=mask, induced_adjacency=induced, threshold=threshold)


def connected_components(selection: SubgraphSelection) -> list[list[int]]:
    """Connected components of the induced subgraph, as sorted index lists."""
    nodes = selection.node_indices()
    remaining = set(nodes)
    components: list[list[int]] = []
    while remaining:
        seed_node = min(remaining)
        stack = [seed_node]
        comp = {seed_node}
        remaining.discard(seed_node)
        while stack:
            u = stack.pop()
            for v in np.nonzero(selection.induced_adjacency[u])[0]:
                v = int(v)
                if v in remaining:
                    remaining.discard(v)
                    comp.add(v)
                    stack.append(v)
        components.append(sorted(comp))
    return components


def largest_connected_part(selection: SubgraphSelection) -> SubgraphSelection:
    """Restrict the selection to its largest component.

    Size ties go to the component containing the smallest node index, which
    is the first one found by the min-seeded search.
    """
    if selection.empty:
        raise ValueError("largest_connected_part: selection is empty")
    components = connected_components(selection)
    best = max(components, key=len)  # max is stable: first largest wins
    mask = np.zeros_like(selection.node_mask)
    mask[best] = True
    n = selection.node_mask.shape[0]
    induced = selection.induced_adjacency * np.outer(mask, mask)
    return SubgraphSelection(node_mask=mask, induced_adjacency=induced, threshold=selection.threshold)


# -- export -------------------------------------------------------------------


def selection_record(
    graph_id: int,
    graph: Graph,
    selection: SubgraphSelection,
    soft: Optional[np.ndarray] = None,
) -> dict:
    kept = [
        [u, v]
        for u, v in graph.edges()
        if selection.node_mask[u] and selection.node_mask[v]
    ]
    record = {
        "graph_id": graph_id,
        "node_mask": [bool(b) for b in selection.node_mask],
        "kept_edges": kept,
        "threshold": selection.threshold,
    }
    if soft is not None:
        record["subgraph_prob"] = [float(p) for p in np.asarray(soft)[:, 0]]
    return record


def dump_selections(path: str, records: Sequence[dict]) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def parse_selections(path: str) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out

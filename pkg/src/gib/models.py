"""Model assemblies: the subgraph-bottleneck model and the baselines.

Parameter groups follow the roles in the bi-level scheme: the generator's
encoder and assignment MLP plus the classifier are trained in the outer
phase, the statistics-network head in the inner phase. The attention
classifier is the self-attentive aggregation baseline whose node scores feed
the top-k selections.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import tensor as T
from .graphs import Graph
from .mi import StatisticsNetwork
from .nn import AttentionHead, GcnEncoder, Mlp
from .subgraph import SubgraphGenerator, subgraph_embedding
from .tensor import Tensor


class GibModel:
    """Subgraph generator + classifier + statistics network."""

    def __init__(
        self,
        feature_dim: int,
        num_classes: Optional[int],
        rng: np.random.Generator,
        hidden: int = 16,
        gcn_layers: int = 2,
        mlp_hidden: int = 16,
    ):
        self.generator = SubgraphGenerator(
            feature_dim, hidden, rng, gcn_layers=gcn_layers, mlp_hidden=mlp_hidden
        )
        out_width = num_classes if num_classes is not None else 1
        self.classifier = Mlp([hidden, mlp_hidden, out_width], rng, hidden_activation="tanh")
        self.statnet = StatisticsNetwork(self.generator.encoder, hidden, rng, hidden=mlp_hidden)
        self.num_classes = num_classes
        self.hidden = hidden
        # regression targets are standardized during training; predictions undo
        # it. Kept as a named (non-trained) tensor so checkpoints carry it.
        self._label_scale = Tensor(np.array([[0.0, 1.0]]))

    @property
    def label_mean(self) -> float:
        return float(self._label_scale.data[0, 0])

    @label_mean.setter
    def label_mean(self, value: float) -> None:
        self._label_scale.data[0, 0] = value

    @property
    def label_std(self) -> float:
        return float(self._label_scale.data[0, 1])

    @label_std.setter
    def label_std(self, value: float) -> None:
        self._label_scale.data[0, 1] = value

    # parameter groups ------------------------------------------------------

    def theta_params(self) -> list[Tensor]:
        """Generator parameters (encoder + assignment MLP)."""
        return self.generator.encoder_params() + self.generator.mlp_params()

    def phi1_params(self) -> list[Tensor]:
        """Classifier parameters."""
        return self.classifier.params()

    def phi2_params(self) -> list[Tensor]:
        """Statistics-network head parameters."""
        return self.statnet.head_params()

    def outer_params(self) -> list[Tensor]:
        return self.theta_params() + self.phi1_params()

    def named_params(self) -> list[tuple[str, Tensor]]:
        return (
            self.generator.named_params()
            + self.classifier.named_params("classifier")
            + self.statnet.named_params()
            + [("label_scale", self._label_scale)]
        )

    # forward pieces ----------------------------------------------------------

    def forward_graph(self, graph: Graph) -> tuple[Tensor, Tensor, Tensor]:
        """Returns (assignment S, node embeddings, subgraph embedding)."""
        s, x = self.generator.assignment(graph)
        return s, x, subgraph_embedding(s, x)

    def logits(self, sub_emb: Tensor) -> Tensor:
        return self.classifier.forward(sub_emb)

    def predict(self, graph: Graph) -> float | int:
        _, _, sub_emb = self.forward_graph(graph)
        out = self.logits(sub_emb).data
        if self.num_classes is None:
            return float(out[0, 0]) * self.label_std + self.label_mean
        return int(np.argmax(out[0]))

    def standardize_label(self, label: float | int) -> float | int:
        if self.num_classes is not None:
            return label
        return (float(label) - self.label_mean) / self.label_std

    def assignment_matrix(self, graph: Graph) -> np.ndarray:
        s, _ = self.generator.assignment(graph)
        return s.data


class AttentionClassifier:
    """GCN encoder + self-attentive readout + MLP classifier.

    The readout's node scores are exposed so top-k node selections can be
    carved out of a trained model.
    """

    def __init__(
        self,
        feature_dim: int,
        num_classes: Optional[int],
        rng: np.random.Generator,
        hidden: int = 16,
        gcn_layers: int = 2,
        mlp_hidden: int = 16,
    ):
        widths = [feature_dim] + [hidden] * gcn_layers
        self.encoder = GcnEncoder(widths, rng)
        self.attention = AttentionHead(hidden, mlp_hidden, rng)
        out_width = num_classes if num_classes is not None else 1
        self.classifier = Mlp([hidden, mlp_hidden, out_width], rng, hidden_activation="tanh")
        self.num_classes = num_classes
        self.label_mean = 0.0
        self.label_std = 1.0

    def forward_graph(self, graph: Graph) -> tuple[Tensor, Tensor]:
        """Returns (logits or regression output, attention scores 1 x n)."""
        x = self.encoder.forward_graph(graph)
        graph_emb, scores = self.attention.forward(x)
        return self.classifier.forward(graph_emb), scores

    def node_scores(self, graph: Graph) -> np.ndarray:
        _, scores = self.forward_graph(graph)
        return scores.data.reshape(-1)

    def standardize_label(self, label: float | int) -> float | int:
        if self.num_classes is not None:
            return label
        return (float(label) - self.label_mean) / self.label_std

    def predict(self, graph: Graph) -> float | int:
        out, _ = self.forward_graph(graph)
        if self.num_classes is None:
            return float(out.data[0, 0]) * self.label_std + self.label_mean
        return int(np.argmax(out.data[0]))

    def params(self) -> list[Tensor]:
        return self.encoder.params() + self.attention.params() + self.classifier.params()

    def named_params(self) -> list[tuple[str, Tensor]]:
        return (
            self.encoder.named_params("att.encoder")
            + self.attention.named_params("att.head")
            + self.classifier.named_params("att.classifier")
        )


class MeanPoolClassifier:
    """GCN encoder + mean readout + MLP classifier (plain aggregation)."""

    def __init__(
        self,
        feature_dim: int,
        num_classes: Optional[int],
        rng: np.random.Generator,
        hidden: int = 16,
        gcn_layers: int = 2,
        mlp_hidden: int = 16,
    ):
        widths = [feature_dim] + [hidden] * gcn_layers
        self.encoder = GcnEncoder(widths, rng)
        out_width = num_classes if num_classes is not None else 1
        self.classifier = Mlp([hidden, mlp_hidden, out_width], rng, hidden_activation="tanh")
        self.num_classes = num_classes
        self.label_mean = 0.0
        self.label_std = 1.0

    def forward_graph(self, graph: Graph) -> Tensor:
        x = self.encoder.forward_graph(graph)
        pool = Tensor(np.full((1, graph.n), 1.0 / graph.n))
        return self.classifier.forward(pool @ x)

    def standardize_label(self, label: float | int) -> float | int:
        if self.num_classes is not None:
            return label
        return (float(label) - self.label_mean) / self.label_std

    def predict(self, graph: Graph) -> float | int:
        out = self.forward_graph(graph).data
        if self.num_classes is None:
            return float(out[0, 0]) * self.label_std + self.label_mean
        return int(np.argmax(out[0]))

    def params(self) -> list[Tensor]:
        return self.encoder.params() + self.classifier.params()

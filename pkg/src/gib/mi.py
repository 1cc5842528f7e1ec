"""Donsker-Varadhan mutual-information machinery.

A statistics network scores (graph, subgraph) pairs with a single real
number: the graph side is the mean of the shared encoder's node embeddings,
the subgraph side is the generator's probability-weighted embedding, and an
MLP head maps their concatenation to the score. Over a batch, the estimate

    mean_i f(G_i, sub_i) - log mean_i exp f(G_i, sub_{pair(i)})

rises toward the true mutual information as the head is trained to maximize
it. Mismatched pairs come from the cyclic shift pair(i) = i+1 mod N by
default, a linear-cost realization of "any j != i"; the full mismatched
double sum is available for small batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import tensor as T
from .graphs import Graph
from .nn import GcnEncoder, Mlp
from .optim import make_optimizer
from .tensor import Tensor


class StatisticsNetwork:
    """Scores (graph embedding, subgraph embedding) pairs with an MLP head.

    The encoder is shared with the subgraph generator and is trained only in
    the outer phase; the head parameters are this network's own.
    """

    def __init__(
        self,
        shared_encoder: GcnEncoder,
        embed_dim: int,
        rng: np.random.Generator,
        hidden: int = 16,
    ):
        self.encoder = shared_encoder
        self.head = Mlp([2 * embed_dim, hidden, 1], rng, hidden_activation="tanh")
        self.embed_dim = embed_dim

    def graph_embedding(self, graph: Graph) -> Tensor:
        """Mean of the shared encoder's node embeddings, as a 1 x d row."""
        x = self.encoder.forward_graph(graph)
        pool = Tensor(np.full((1, graph.n), 1.0 / graph.n))
        return pool @ x

    def statistic(self, graph_emb: Tensor, sub_emb: Tensor) -> Tensor:
        """The scalar score of one pair of embeddings."""
        return T.pick(self.head.forward(T.concat_cols([graph_emb, sub_emb])), 0, 0)

    def head_params(self) -> list[Tensor]:
        return self.head.params()

    def reinitialize_head(self, rng: np.random.Generator) -> None:
        """Fresh head draw; the bi-level loop does this before each inner run."""
        hidden = self.head.weights[0].shape[1]
        self.head = Mlp([2 * self.embed_dim, hidden, 1], rng, hidden_activation="tanh")

    def named_params(self) -> list[tuple[str, Tensor]]:
        return self.head.named_params("statnet.head")


@dataclass
class MiBatchEstimate:
    """joint - marginal, kept as tensors so the value stays differentiable."""

    joint_term: Tensor
    marginal_term: Tensor
    value: Tensor

    def __float__(self) -> float:
        return float(self.value.data)


def mi_batch_loss(
    statnet: StatisticsNetwork,
    graph_embs: Sequence[Tensor],
    sub_embs: Sequence[Tensor],
    full_pairing: bool = False,
) -> MiBatchEstimate:
    """The batched estimator over matched and mismatched embedding pairs.

    ``graph_embs[i]`` and ``sub_embs[i]`` must describe the same graph. With
    ``full_pairing`` the marginal term averages over all N(N-1) mismatched
    pairs instead of the cyclic shift.
    """
    n = len(graph_embs)
    if n != len(sub_embs):
        raise ValueError(f"batch sides disagree: {n} graphs vs {len(sub_embs)} subgraphs")
    if n < 2:
        raise ValueError("mutual-information batch needs at least 2 graphs")

    joint_in = T.concat_rows(
        [T.concat_cols([graph_embs[i], sub_embs[i]]) for i in range(n)]
    )
    joint_term = T.tmean(statnet.head.forward(joint_in))

    if full_pairing:
        pairs = [(i, j) for i in range(n) for j in range(n) if j != i]
    else:
        pairs = [(i, (i + 1) % n) for i in range(n)]
    marginal_in = T.concat_rows(
        [T.concat_cols([graph_embs[i], sub_embs[j]]) for i, j in pairs]
    )
    scores = statnet.head.forward(marginal_in)
    marginal_term = T.logsumexp(scores) - math.log(len(pairs))

    return MiBatchEstimate(
        joint_term=joint_term,
        marginal_term=marginal_term,
        value=joint_term - marginal_term,
    )


def inner_maximize(
    statnet: StatisticsNetwork,
    graph_embs: np.ndarray,
    sub_embs: np.ndarray,
    steps: int,
    lr: float,
    optimizer_kind: str = "adam",
    batch_size: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    full_pairing: bool = False,
) -> list[float]:
    """Train the head to maximize the batched estimate; everything else frozen.

    The embeddings come in as plain arrays (already detached from the
    generator), so the only live parameters on the tape are the head's.
    Returns the per-step estimate trace.
    """
    if steps < 1:
        raise ValueError(f"inner loop needs at least 1 step, got {steps}")
    n = graph_embs.shape[0]
    if n < 2:
        raise ValueError("inner loop needs at least 2 cached pairs")
    optimizer = make_optimizer(optimizer_kind, statnet.head_params(), lr)
    trace: list[float] = []
    for step in range(steps):
        if batch_size is not None and batch_size < n:
            if rng is None:
                raise ValueError("minibatched inner loop needs an rng")
            idx = rng.choice(n, size=batch_size, replace=False)
        else:
            idx = np.arange(n)
        g_batch = [Tensor(graph_embs[i : i + 1]) for i in idx]
        s_batch = [Tensor(sub_embs[i : i + 1]) for i in idx]
        estimate = mi_batch_loss(statnet, g_batch, s_batch, full_pairing=full_pairing)
        loss = -estimate.value
        optimizer.zero_grad()
        loss.backward()
        if not np.isfinite(float(loss.data)):
            raise FloatingPointError(
                f"inner step {step}: estimator diverged, trace tail {trace[-5:]}"
            )
        optimizer.step()
        trace.append(float(estimate.value.data))
    return trace

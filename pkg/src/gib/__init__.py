"""gib: recognize informative yet compressed subgraphs of labeled graphs.

A self-contained numpy implementation of subgraph recognition through a
graph information bottleneck: a subgraph generator trained against a
classification loss, a Donsker-Varadhan mutual-information estimator, and a
connectivity loss, optimized with an inner/outer (bi-level) loop.
"""

__version__ = "0.1.0"

from .graphs import (
    Dataset,
    Graph,
    MotifConfig,
    add_noise_edges,
    gen_planted_motif_dataset,
    kfold_splits,
    load_tu_dataset,
    random_splits,
    save_tu_dataset,
    to_line_graph,
)
from .models import AttentionClassifier, GibModel, MeanPoolClassifier
from .subgraph import connectivity_loss, discretize, largest_connected_part
from .tensor import Tensor
from .train import TrainConfig, TrainResult, train

__all__ = [
    "AttentionClassifier",
    "Dataset",
    "GibModel",
    "Graph",
    "MeanPoolClassifier",
    "MotifConfig",
    "Tensor",
    "TrainConfig",
    "TrainResult",
    "__version__",
    "add_noise_edges",
    "connectivity_loss",
    "discretize",
    "gen_planted_motif_dataset",
    "kfold_splits",
    "largest_connected_part",
    "load_tu_dataset",
    "random_splits",
    "save_tu_dataset",
    "to_line_graph",
    "train",
]

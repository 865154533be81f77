"""Attributed-graph community detection: routed encoders, attention-guided
diffusion, memory-sharded contrastive training, chunked mutual top-k
similarity extraction, and modularity maximization."""

__version__ = "0.1.0"

from .graphs import Graph, Partition, mean_degree
from .rng import Rng

__all__ = ["Graph", "Partition", "Rng", "mean_degree", "__version__"]

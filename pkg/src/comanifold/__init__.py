"""Co-manifold learning on matrices with missing entries.

Rows and columns of a partially observed matrix are co-clustered at many
scales with a concave fusion penalty, the filled-in estimates are turned
into multi-scale row and column distances, and diffusion maps embed both
modes.
"""

from .datasets import LinkageSpec, generate, shuffle_modes, top_variance_features
from .embedding import DiffusionEmbedding, diffusion_map, embed_distances
from .evaluation import adjusted_rand_index, kmeans
from .graph import DisconnectedGraphError, NeighborGraph, knn_graph, masked_distance
from .incomplete import MaskSpec, ObservedMatrix, apply_mask, fill_with, observed_mean
from .metric import MultiScaleDistances, accumulate
from .penalty import LinearPenalty, SnowflakePenalty
from .pipeline import CoManifoldResult, co_manifold, diffusion_maps_missing
from .solver import ConvergenceError, SolverConfig, SolveResult, co_cluster_missing, convex_bicluster
from .sweep import ScaleGrid, SweepResult, sweep

__all__ = [
    "CoManifoldResult",
    "ConvergenceError",
    "DiffusionEmbedding",
    "DisconnectedGraphError",
    "LinearPenalty",
    "LinkageSpec",
    "MaskSpec",
    "MultiScaleDistances",
    "NeighborGraph",
    "ObservedMatrix",
    "ScaleGrid",
    "SnowflakePenalty",
    "SolveResult",
    "SolverConfig",
    "SweepResult",
    "accumulate",
    "adjusted_rand_index",
    "apply_mask",
    "co_cluster_missing",
    "co_manifold",
    "convex_bicluster",
    "diffusion_map",
    "diffusion_maps_missing",
    "embed_distances",
    "fill_with",
    "generate",
    "kmeans",
    "knn_graph",
    "masked_distance",
    "observed_mean",
    "shuffle_modes",
    "sweep",
    "top_variance_features",
]

"""End-to-end co-manifold learning and the single-mode diffusion-maps baseline."""

from __future__ import annotations

from dataclasses import dataclass

from .embedding import DiffusionEmbedding, embed_distances
from .graph import NeighborGraph, knn_graph, masked_distance_matrix
from .incomplete import ObservedMatrix
from .metric import DEFAULT_ALPHA, DistanceAccumulator, MultiScaleDistances
from .penalty import SnowflakePenalty
from .solver import SolverConfig
from .sweep import ScaleGrid, SweepResult, sweep


@dataclass
class CoManifoldResult:
    row_graph: NeighborGraph
    col_graph: NeighborGraph
    sweep: SweepResult
    distances: MultiScaleDistances
    row_embedding: DiffusionEmbedding
    col_embedding: DiffusionEmbedding


def co_manifold(
    X: ObservedMatrix,
    k_rows: int | None = None,
    k_cols: int | None = None,
    penalty=None,
    grid: ScaleGrid | None = None,
    cfg: SolverConfig | None = None,
    alpha: float = DEFAULT_ALPHA,
    dim: int = 3,
    warm_start: bool = True,
    n_jobs: int = 1,
    Gr: NeighborGraph | None = None,
    Gc: NeighborGraph | None = None,
) -> CoManifoldResult:
    """Graphs, multi-scale sweep, multi-scale metric and row/column diffusion maps."""
    penalty = SnowflakePenalty() if penalty is None else penalty
    if Gr is None:
        Gr = knn_graph(X, "rows", k_rows)
    if Gc is None:
        Gc = knn_graph(X, "columns", k_cols)
    acc = DistanceAccumulator(alpha)
    cells = sweep(
        X, Gr, Gc, penalty=penalty, grid=grid, cfg=cfg, warm_start=warm_start, n_jobs=n_jobs, on_cell=acc
    )
    dist = acc.result()
    return CoManifoldResult(
        row_graph=Gr,
        col_graph=Gc,
        sweep=cells,
        distances=dist,
        row_embedding=embed_distances(dist.row_dist, dim),
        col_embedding=embed_distances(dist.col_dist, dim),
    )


def diffusion_maps_missing(X: ObservedMatrix, mode: str = "rows", dim: int = 3) -> DiffusionEmbedding:
    """Baseline: diffusion maps on the masked-distance matrix of one mode.

    Pairs without a common observed entry get the largest finite distance.
    """
    D = masked_distance_matrix(X, mode)
    finite = D[~(D == float("inf"))]
    D[D == float("inf")] = finite.max()
    return embed_distances(D, dim)

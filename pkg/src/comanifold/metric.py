"""Multi-scale row and column distances accumulated over the solution surface."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

DEFAULT_ALPHA = -0.5


@dataclass
class MultiScaleDistances:
    row_dist: np.ndarray
    col_dist: np.ndarray
    alpha: float = DEFAULT_ALPHA
    cells_used: list = field(default_factory=list)


def cell_weight(l: int, k: int, alpha: float = DEFAULT_ALPHA) -> float:
    """``(gamma_r * gamma_c) ** alpha`` for ``gamma_r = 2**l``, ``gamma_c = 2**k``."""
    return float((2.0 ** (l + k)) ** alpha)


def cell_distance(cell, mode: str, i: int, j: int, alpha: float = DEFAULT_ALPHA) -> float:
    Xf = cell.X_filled if mode in ("rows", "row") else cell.X_filled.T
    return cell_weight(cell.l, cell.k, alpha) * float(np.linalg.norm(Xf[i] - Xf[j]))


def euclidean_distances(V) -> np.ndarray:
    """Pairwise Euclidean distances between the rows of ``V``."""
    return squareform(pdist(np.asarray(V, dtype=float)))


class DistanceAccumulator:
    """Running sum of weighted per-cell distances, fed one cell at a time.

    Feeding the cells of a list in order gives bitwise the same matrices as
    :func:`accumulate` on that list.
    """

    def __init__(self, alpha: float = DEFAULT_ALPHA):
        self.alpha = alpha
        self.row_dist = None
        self.col_dist = None
        self.cells_used = []

    def add(self, cell):
        w = cell_weight(cell.l, cell.k, self.alpha)
        Dr = w * euclidean_distances(cell.X_filled)
        Dc = w * euclidean_distances(cell.X_filled.T)
        if self.row_dist is None:
            self.row_dist, self.col_dist = Dr, Dc
        else:
            if Dr.shape != self.row_dist.shape or Dc.shape != self.col_dist.shape:
                raise ValueError("cell dimensions differ from earlier cells")
            self.row_dist = self.row_dist + Dr
            self.col_dist = self.col_dist + Dc
        self.cells_used.append((cell.l, cell.k))

    __call__ = add

    def result(self) -> MultiScaleDistances:
        if self.row_dist is None:
            raise ValueError("no cells accumulated")
        return MultiScaleDistances(
            self.row_dist.copy(), self.col_dist.copy(), self.alpha, list(self.cells_used)
        )


def accumulate(cells, alpha: float = DEFAULT_ALPHA) -> MultiScaleDistances:
    acc = DistanceAccumulator(alpha)
    for cell in cells:
        acc.add(cell)
    if not acc.cells_used:
        raise ValueError("cannot accumulate an empty cell list")
    return acc.result()

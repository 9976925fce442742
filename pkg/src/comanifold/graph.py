"""k-nearest-neighbor row/column graphs built from observed entries only."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .incomplete import ObservedMatrix

# used for cross-component links when no pair of nodes shares an observed entry
FALLBACK_DISTANCE = 1e300


class DisconnectedGraphError(ValueError):
    """A row or column graph violates the connectivity requirement (Assumption 1)."""


@dataclass(frozen=True)
class NeighborGraph:
    """Undirected simple graph with edges stored as sorted ``(i, j)`` pairs, ``i < j``."""

    node_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for i, j in self.edges:
            if not (0 <= i < j < self.node_count):
                raise ValueError(f"invalid edge ({i}, {j}) for {self.node_count} nodes")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

    @classmethod
    def from_pairs(cls, node_count: int, pairs) -> "NeighborGraph":
        edges = {(min(int(i), int(j)), max(int(i), int(j))) for i, j in pairs if i != j}
        return cls(node_count, tuple(sorted(edges)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def heads(self) -> np.ndarray:
        return _readonly(np.array([e[0] for e in self.edges], dtype=np.intp))

    @cached_property
    def tails(self) -> np.ndarray:
        return _readonly(np.array([e[1] for e in self.edges], dtype=np.intp))


def _readonly(a):
    a.flags.writeable = False
    return a


def _mode_arrays(X: ObservedMatrix, mode: str):
    if mode in ("rows", "row"):
        return X.values, X.mask
    if mode in ("columns", "cols", "column"):
        return X.values.T, X.mask.T
    raise ValueError(f"mode must be 'rows' or 'columns', got {mode!r}")


def masked_distance(a, b, mask_a, mask_b) -> float | None:
    """Euclidean distance estimated from the entries observed in both vectors.

    The mean squared difference over the common support is rescaled to the
    full vector length. Returns ``None`` when the vectors share no observed
    entry.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    common = np.asarray(mask_a, dtype=bool) & np.asarray(mask_b, dtype=bool)
    n_common = int(common.sum())
    if n_common == 0:
        return None
    sq = np.sum((a[common] - b[common]) ** 2)
    return float(np.sqrt(a.size * sq / n_common))


def masked_distance_matrix(X: ObservedMatrix, mode: str = "rows") -> np.ndarray:
    """All-pairs :func:`masked_distance` along one mode; ``inf`` marks absent pairs."""
    V, M = _mode_arrays(X, mode)
    n, L = V.shape
    D = np.zeros((n, n))
    for i in range(n - 1):
        common = M[i] & M[i + 1 :]
        diff = np.where(common, V[i] - V[i + 1 :], 0.0)
        counts = common.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            row = np.sqrt(L * np.sum(diff**2, axis=1) / counts)
        row[counts == 0] = np.inf
        D[i, i + 1 :] = row
        D[i + 1 :, i] = row
    return D


def default_k(node_count: int) -> int:
    return max(2, int(round(math.log2(node_count))))


def is_connected(G: NeighborGraph) -> bool:
    if G.node_count <= 1:
        return True
    return _n_components(G)[0] == 1


def _n_components(G: NeighborGraph):
    n = G.node_count
    if G.n_edges == 0:
        return n, np.arange(n)
    A = coo_matrix((np.ones(G.n_edges), (G.heads, G.tails)), shape=(n, n))
    return connected_components(A, directed=False)


def incidence(G: NeighborGraph) -> np.ndarray:
    """Edge-by-node incidence matrix: +1 at the head ``i``, -1 at the tail ``j`` of edge ``(i, j)``."""
    Phi = np.zeros((G.n_edges, G.node_count))
    rows = np.arange(G.n_edges)
    Phi[rows, G.heads] = 1.0
    Phi[rows, G.tails] = -1.0
    return Phi


def ensure_connected(G: NeighborGraph, D) -> NeighborGraph:
    """Join the components of ``G`` with the cheapest available cross edges.

    Kruskal over component contractions: candidate cross-component pairs are
    scanned by increasing distance (ties by index) and each one that merges
    two components is added. Absent (non-finite) distances rank last and are
    only used when nothing else links two components.
    """
    n_comp, labels = _n_components(G)
    if n_comp == 1:
        return G
    D = np.asarray(D, dtype=float)
    iu, ju = np.triu_indices(G.node_count, k=1)
    cross = labels[iu] != labels[ju]
    iu, ju = iu[cross], ju[cross]
    d = D[iu, ju]
    d = np.where(np.isfinite(d), d, FALLBACK_DISTANCE)
    order = np.lexsort((ju, iu, d))

    parent = list(range(n_comp))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    added = []
    for idx in order:
        i, j = int(iu[idx]), int(ju[idx])
        ri, rj = find(labels[i]), find(labels[j])
        if ri != rj:
            parent[ri] = rj
            added.append((i, j))
            if len(added) == n_comp - 1:
                break
    return NeighborGraph(G.node_count, tuple(sorted(G.edges + tuple(added))))


def knn_graph(X: ObservedMatrix, mode: str = "rows", k: int | None = None) -> NeighborGraph:
    """Connected symmetric k-NN graph over rows or columns under the masked distance.

    Each node links to its ``k`` nearest nodes (ties broken by smaller index),
    the directed links are symmetrized, and :func:`ensure_connected` patches
    any remaining disconnection.
    """
    D = masked_distance_matrix(X, mode)
    n = D.shape[0]
    if k is None:
        k = default_k(n)
    k = min(k, n - 1)
    if k < 1:
        raise ValueError("k must be at least 1")
    finite = np.isfinite(D)
    np.fill_diagonal(finite, False)
    lonely = np.flatnonzero(~finite.any(axis=1))
    if lonely.size:
        raise ValueError(
            f"{mode} {lonely.tolist()} share no observed entry with any other {mode}; "
            "cannot rank neighbors"
        )
    pairs = []
    idx = np.arange(n)
    for i in range(n):
        cand = idx[finite[i]]
        order = np.lexsort((cand, D[i, cand]))
        pairs.extend((i, int(j)) for j in cand[order[:k]])
    G = NeighborGraph.from_pairs(n, pairs)
    return ensure_connected(G, D)

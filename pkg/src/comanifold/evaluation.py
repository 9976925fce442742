"""k-means on embeddings and Adjusted Rand Index scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    wcss: float
    history: list


def _relabel(labels) -> np.ndarray:
    """Map labels to 0..K-1 in order of first appearance."""
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=int)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inv]


def _wcss(points, labels, centers) -> float:
    return float(np.sum((points - centers[labels]) ** 2))


def _seed_centers(points, k, rng):
    """Greedy D^2-weighted (k-means++) seeding."""
    n = points.shape[0]
    idx = [int(rng.integers(n))]
    d2 = np.sum((points - points[idx[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            remaining = np.setdiff1d(np.arange(n), idx)
            nxt = int(remaining[0])
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[idx].copy()


def _assign(points, centers):
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _lloyd(points, centers, max_iter):
    history = []
    prev = None
    for _ in range(max_iter):
        labels = _assign(points, centers)
        history.append(_wcss(points, labels, centers))
        if prev is not None and np.array_equal(labels, prev):
            break
        for c in range(centers.shape[0]):
            members = labels == c
            if members.any():
                centers[c] = points[members].mean(axis=0)
        prev = labels
    labels = _assign(points, centers)
    return labels, centers, _wcss(points, labels, centers), history


def kmeans(points, k: int, seed: int = 0, restarts: int = 10, max_iter: int = 300):
    """Lloyd's algorithm from k-means++ seeds, best of ``restarts`` by within-cluster SS.

    Deterministic given ``seed``; ties between restarts go to the earliest.
    Returns a :class:`KMeansResult` whose labels are contiguous from 0.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, centers, wcss, history = _lloyd(points, _seed_centers(points, k, rng), max_iter)
        if best is None or wcss < best.wcss:
            best = KMeansResult(labels, centers, wcss, history)
    best.labels = _relabel(best.labels)
    return best


def _pairs(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2.0


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie adjusted Rand index.

    Returns 1.0 in the degenerate cases where both partitions are all
    singletons or both a single cluster (where the formula is 0/0).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be 1-D and of equal length")
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1)
    sum_ij = _pairs(table).sum()
    sum_a = _pairs(table.sum(axis=1)).sum()
    sum_b = _pairs(table.sum(axis=0)).sum()
    total = n * (n - 1) / 2.0
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    denom = max_index - expected
    if denom == 0:
        return 1.0
    return float((sum_ij - expected) / denom)

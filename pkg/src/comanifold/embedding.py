"""Diffusion-map embeddings from a pairwise distance matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# relative eigenvalue separation below which neighbouring pairs are flagged degenerate
DEGENERACY_TOL = 1e-8


@dataclass
class DiffusionEmbedding:
    coordinates: np.ndarray
    eigenvalues: np.ndarray
    sigma: float = float("nan")
    eigenvectors: np.ndarray | None = None
    degenerate: np.ndarray | None = None


def median_bandwidth(D) -> float:
    """Median of the off-diagonal distances, or the smallest positive one if that median is 0."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    off = D[~np.eye(n, dtype=bool)]
    sigma = float(np.median(off))
    if sigma > 0:
        return sigma
    positive = off[off > 0]
    if positive.size == 0:
        raise ValueError("all pairwise distances are zero")
    return float(positive.min())


def gaussian_affinity(D, sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    D = np.asarray(D, dtype=float)
    return np.exp(-(D**2) / sigma**2)


def markov_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return A / A.sum(axis=1, keepdims=True)


def diffusion_map(A, d: int = 3, sigma: float = float("nan")) -> DiffusionEmbedding:
    """Embed the nodes of affinity ``A`` with the top non-trivial eigenpairs of ``D^-1 A``.

    The random-walk matrix is similar to ``S = D^-1/2 A D^-1/2``; eigenpairs
    of ``S`` are computed with a symmetric solver and mapped back by
    ``D^-1/2``. The trivial pair (eigenvalue 1, constant vector) is dropped.
    Each returned eigenvector has unit norm and a positive largest-magnitude
    entry, and coordinate column ``l`` is ``lambda_l * psi_l``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("affinity must be square")
    if not 1 <= d < n:
        raise ValueError(f"embedding dimension must be in [1, {n - 1}], got {d}")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * np.abs(A).max()):
        raise ValueError("affinity must be symmetric")
    deg = A.sum(axis=1)
    if np.any(deg <= 0):
        raise ValueError("every node needs positive total affinity")
    inv_sqrt = 1.0 / np.sqrt(deg)
    S = inv_sqrt[:, None] * A * inv_sqrt[None, :]
    S = 0.5 * (S + S.T)
    try:
        evals, evecs = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(evals)[::-1]
    evals = evals[order][: d + 1]
    psi = inv_sqrt[:, None] * evecs[:, order][:, : d + 1]
    psi /= np.linalg.norm(psi, axis=0, keepdims=True)
    peak = np.argmax(np.abs(psi), axis=0)
    psi *= np.sign(psi[peak, np.arange(psi.shape[1])])[None, :]

    lam = evals[1:]
    gaps = np.abs(np.diff(evals))
    close = gaps <= DEGENERACY_TOL * np.maximum(1.0, np.abs(evals[:-1]))
    degenerate = np.zeros(d, dtype=bool)
    # pair (l, l+1) of the full spectrum maps to output slots l-1 and l
    for idx in np.flatnonzero(close):
        for slot in (idx - 1, idx):
            if 0 <= slot < d:
                degenerate[slot] = True
    return DiffusionEmbedding(
        coordinates=psi[:, 1:] * lam[None, :],
        eigenvalues=lam,
        sigma=sigma,
        eigenvectors=psi,
        degenerate=degenerate,
    )


def embed_distances(D, d: int = 3, sigma: float | None = None) -> DiffusionEmbedding:
    """Median-bandwidth Gaussian kernel followed by :func:`diffusion_map`."""
    sigma = median_bandwidth(D) if sigma is None else sigma
    return diffusion_map(gaussian_affinity(D, sigma), d, sigma=sigma)

"""Synthetic coupled-geometry matrices and real-data preprocessing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VARIANTS = ("linkage", "linkage2")


@dataclass(frozen=True)
class LinkageSpec:
    """Parameters for the point-set distance matrices.

    Rows are points on a helix (``linkage``) or in three Gaussian clouds
    (``linkage2``); columns are points on a saddle surface. ``noise`` is the
    isotropic jitter of the row points: the cloud standard deviation for
    ``linkage2`` (default 1) and helix jitter for ``linkage`` (default 0).
    """

    n_rows: int = 100
    n_cols: int = 150
    variant: str = "linkage"
    seed: int = 0
    noise: float | None = None
    offset: float = 10.0
    helix_radius: float = 1.0
    helix_pitch: float = 1.0
    surface_half_width: float = 1.0
    cluster_separation: float = 15.0

    def __post_init__(self):
        if self.n_rows < 4 or self.n_cols < 4:
            raise ValueError("need at least 4 rows and 4 columns")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.noise is not None and self.noise < 0:
            raise ValueError("noise must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def row_noise(self) -> float:
        if self.noise is not None:
            return self.noise
        return 1.0 if self.variant == "linkage2" else 0.0


def cross_distances(Z, Y) -> np.ndarray:
    """``X[i, j] = ||Z_i - Y_j||_2``."""
    Z = np.asarray(Z, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return np.sqrt(np.sum((Z[:, None, :] - Y[None, :, :]) ** 2, axis=2))


def saddle_surface(n_points: int, rng, half_width: float = 1.0):
    """Jittered uniform grid on ``z = x * y`` over ``[-w, w]^2``.

    Returns ``(points, (u, v))`` with ``u, v`` the planar coordinates.
    """
    g1 = math.ceil(math.sqrt(n_points))
    g2 = math.ceil(n_points / g1)
    u, v = np.meshgrid(np.linspace(-1, 1, g1), np.linspace(-1, 1, g2), indexing="ij")
    u, v = u.ravel()[:n_points], v.ravel()[:n_points]
    spacing = 2.0 / max(g1 - 1, 1)
    u = np.clip(u + rng.uniform(-spacing / 4, spacing / 4, n_points), -1, 1) * half_width
    v = np.clip(v + rng.uniform(-spacing / 4, spacing / 4, n_points), -1, 1) * half_width
    return np.column_stack([u, v, u * v]), (u, v)


def helix(n_points: int, rng, radius: float = 1.0, pitch: float = 1.0):
    """Points at uniformly drawn ``t in [0, 4 pi]`` on a two-turn helix; returns ``(points, t)``."""
    t = rng.uniform(0.0, 4.0 * np.pi, n_points)
    pts = np.column_stack([radius * np.cos(t), radius * np.sin(t), pitch * t / (2.0 * np.pi)])
    return pts, t


def cloud_centers(separation: float = 10.0) -> np.ndarray:
    """Equilateral triangle in the x-y plane, centred at the origin."""
    c = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, math.sqrt(3) / 2, 0.0]]) * separation
    return c - c.mean(axis=0)


def balanced_labels(n: int, n_clusters: int = 3) -> np.ndarray:
    """Contiguous labels with cluster sizes differing by at most one."""
    sizes = [n // n_clusters + (1 if c < n % n_clusters else 0) for c in range(n_clusters)]
    return np.repeat(np.arange(n_clusters), sizes)


def _surface_meta(Y, uv):
    return {"u": uv[0], "v": uv[1], "x": Y[:, 0], "y": Y[:, 1], "z": Y[:, 2]}


def generate_linkage(spec: LinkageSpec):
    """Helix rows x saddle-surface columns. Returns ``(X, row_meta, col_meta)``."""
    rng = np.random.default_rng(spec.seed)
    Z, t = helix(spec.n_rows, rng, spec.helix_radius, spec.helix_pitch)
    Y, uv = saddle_surface(spec.n_cols, rng, spec.surface_half_width)
    if spec.row_noise > 0:
        Z = Z + rng.normal(scale=spec.row_noise, size=Z.shape)
    Z = Z + np.array([spec.offset, 0.0, 0.0])
    row_meta = {"t": t, "x": Z[:, 0], "y": Z[:, 1], "z": Z[:, 2]}
    return cross_distances(Z, Y), row_meta, _surface_meta(Y, uv)


def generate_linkage2(spec: LinkageSpec):
    """Three Gaussian clouds x saddle-surface columns.

    ``row_meta["label"]`` holds the cloud of each row.
    """
    rng = np.random.default_rng(spec.seed)
    labels = balanced_labels(spec.n_rows, 3)
    centers = cloud_centers(spec.cluster_separation)
    Z = centers[labels] + rng.normal(scale=spec.row_noise, size=(spec.n_rows, 3))
    Y, uv = saddle_surface(spec.n_cols, rng, spec.surface_half_width)
    Z = Z + np.array([spec.offset + spec.cluster_separation, 0.0, 0.0])
    row_meta = {"label": labels, "x": Z[:, 0], "y": Z[:, 1], "z": Z[:, 2]}
    return cross_distances(Z, Y), row_meta, _surface_meta(Y, uv)


def generate(spec: LinkageSpec):
    return generate_linkage(spec) if spec.variant == "linkage" else generate_linkage2(spec)


def top_variance_features(X, count: int) -> np.ndarray:
    """Keep the ``count`` rows of largest sample variance, in their original order."""
    X = np.asarray(X, dtype=float)
    if count < 1:
        raise ValueError("count must be at least 1")
    if count > X.shape[0]:
        raise ValueError(f"count={count} exceeds the number of rows ({X.shape[0]})")
    var = np.nanvar(X, axis=1, ddof=1)
    keep = np.sort(np.argsort(-var, kind="stable")[:count])
    return X[keep]


def shuffle_modes(X, seed: int):
    """Randomly permute rows and columns.

    Returns ``(X_perm, row_perm, col_perm)`` with
    ``X_perm = X[row_perm][:, col_perm]``; ground truth aligns as
    ``labels[row_perm]`` and ``X`` is recovered with
    ``X_perm[invert_permutation(row_perm)][:, invert_permutation(col_perm)]``.
    """
    X = np.asarray(X)
    rng = np.random.default_rng(seed)
    row_perm = rng.permutation(X.shape[0])
    col_perm = rng.permutation(X.shape[1])
    return X[row_perm][:, col_perm], row_perm, col_perm


def invert_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv

"""Concave fusion penalties and the majorization weights they induce."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_nonnegative(z):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("penalty argument must be non-negative")
    return z


def _scalar_or_array(z, out):
    return float(out) if np.ndim(z) == 0 else out


@dataclass(frozen=True)
class SnowflakePenalty:
    r"""Smoothed square root, ``Omega(z) = 1/2 \int_0^z d\zeta / (sqrt(zeta) + eps)``.

    Closed form: ``sqrt(z) - eps * log(1 + sqrt(z) / eps)``. Tends to
    ``sqrt(z)`` as ``eps -> 0`` while keeping a finite slope ``1 / (2 eps)``
    at the origin.
    """

    epsilon: float = 1e-12

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def omega(self, z):
        z = _check_nonnegative(z)
        r = np.sqrt(z)
        eps = self.epsilon
        return _scalar_or_array(z, r - eps * np.log1p(r / eps))

    def omega_deriv(self, z):
        z = _check_nonnegative(z)
        return _scalar_or_array(z, 0.5 / (np.sqrt(z) + self.epsilon))


@dataclass(frozen=True)
class LinearPenalty:
    """``Omega(z) = z``: fixed unit weights, i.e. plain convex biclustering."""

    def omega(self, z):
        z = _check_nonnegative(z)
        return _scalar_or_array(z, z.copy())

    def omega_deriv(self, z):
        z = _check_nonnegative(z)
        return _scalar_or_array(z, np.ones_like(z))


def edge_differences(U, G, mode: str = "rows") -> np.ndarray:
    """Norms of the row (or column) differences of ``U`` across the edges of ``G``."""
    U = np.asarray(U, dtype=float)
    if mode in ("columns", "cols", "column"):
        U = U.T
    elif mode not in ("rows", "row"):
        raise ValueError(f"mode must be 'rows' or 'columns', got {mode!r}")
    if U.shape[0] != G.node_count:
        raise ValueError(f"graph has {G.node_count} nodes but U has {U.shape[0]} {mode}")
    if G.n_edges == 0:
        return np.zeros(0)
    return np.linalg.norm(U[G.heads] - U[G.tails], axis=1)


def mm_weights(U, G, mode: str = "rows", penalty=None) -> np.ndarray:
    """Per-edge weights ``Omega'(||U_i - U_j||)`` for the next convex subproblem."""
    penalty = SnowflakePenalty() if penalty is None else penalty
    return np.asarray(penalty.omega_deriv(edge_differences(U, G, mode)), dtype=float)

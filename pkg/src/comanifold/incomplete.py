"""Partially observed matrices: storage, masking and fill-in arithmetic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ObservedMatrix:
    """An m x n matrix of which only the entries flagged in ``mask`` are known.

    Unobserved slots of ``values`` always hold 0; the mask is the single source
    of truth about what was observed.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape != mask.shape:
            raise ValueError(
                f"values {values.shape} and mask {mask.shape} must be matching 2-D arrays"
            )
        m, n = values.shape
        if m < 2 or n < 2:
            raise ValueError(f"need at least a 2 x 2 matrix, got {m} x {n}")
        if not mask.any():
            raise ValueError("observation mask is empty")
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("observed values must be finite")
        values[~mask] = 0.0
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def complete(cls, X) -> "ObservedMatrix":
        X = np.asarray(X, dtype=float)
        return cls(X, np.ones(X.shape, dtype=bool))

    @classmethod
    def from_nan(cls, X) -> "ObservedMatrix":
        """Build from an array that marks missing entries with NaN."""
        X = np.asarray(X, dtype=float)
        mask = ~np.isnan(X)
        return cls(np.where(mask, X, 0.0), mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    def to_nan(self) -> np.ndarray:
        return np.where(self.mask, self.values, np.nan)

    def transpose(self) -> "ObservedMatrix":
        return ObservedMatrix(self.values.T, self.mask.T)


@dataclass(frozen=True)
class MaskSpec:
    fraction_missing: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction_missing < 1.0:
            raise ValueError(f"fraction_missing must lie in [0, 1), got {self.fraction_missing}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def project_observed(X: ObservedMatrix) -> np.ndarray:
    """Keep observed entries, zero everything else."""
    return X.values * X.mask


def fill_with(X: ObservedMatrix, U) -> np.ndarray:
    """Observed entries of ``X`` with the unobserved ones taken from ``U``."""
    U = np.asarray(U, dtype=float)
    if U.shape != X.shape:
        raise ValueError(f"fill matrix has shape {U.shape}, expected {X.shape}")
    return np.where(X.mask, X.values, U)


def observed_mean(X: ObservedMatrix) -> float:
    if not X.mask.any():
        raise ValueError("observation mask is empty")
    return float(X.values[X.mask].mean())


def apply_mask(X, spec: MaskSpec, max_attempts: int = 1000) -> ObservedMatrix:
    """Hide a uniformly random subset of ``round(fraction * m * n)`` entries.

    Draws are rejected until every row and every column keeps at least one
    observed entry. Deterministic given ``spec.seed``.
    """
    X = np.asarray(X, dtype=float)
    m, n = X.shape
    n_missing = int(round(spec.fraction_missing * m * n))
    # each row and column needs a survivor, so at least max(m, n) entries stay
    if m * n - n_missing < max(m, n):
        raise ValueError(
            f"cannot hide {n_missing} of {m * n} entries and keep every row and column observed"
        )
    rng = np.random.default_rng(spec.seed)
    for _ in range(max_attempts):
        mask = np.ones(m * n, dtype=bool)
        mask[rng.choice(m * n, size=n_missing, replace=False)] = False
        mask = mask.reshape(m, n)
        if mask.any(axis=1).all() and mask.any(axis=0).all():
            return ObservedMatrix(X, mask)
    raise ValueError(
        f"no mask with full row/column coverage found in {max_attempts} draws "
        f"(fraction_missing={spec.fraction_missing})"
    )

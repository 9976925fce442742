"""Dyadic traversal of the (gamma_r, gamma_c) solution surface."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .incomplete import ObservedMatrix
from .penalty import SnowflakePenalty
from .solver import ConvexBiclusterADMM, SolverConfig, _check_graphs, co_cluster_missing

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScaleGrid:
    """Start exponents and inclusive caps: ``gamma_r = 2**l``, ``gamma_c = 2**k``."""

    l0: int = -4
    k0: int = -4
    l_max: int = 20
    k_max: int = 20

    def __post_init__(self):
        if self.l0 >= 0 or self.k0 >= 0:
            raise ValueError("start exponents l0 and k0 must be negative")
        if self.l_max <= self.l0 or self.k_max <= self.k0:
            raise ValueError("grid caps must exceed the start exponents")


@dataclass(frozen=True)
class GridCellResult:
    l: int
    k: int
    X_filled: np.ndarray
    n_r: int
    n_c: int
    objective: float = float("nan")
    outer_iters: int = 0
    U: np.ndarray | None = None

    @property
    def gamma_r(self) -> float:
        return 2.0**self.l

    @property
    def gamma_c(self) -> float:
        return 2.0**self.k


@dataclass
class SweepResult:
    """Executed cells in execution order; ``capped`` is set when a grid cap fired
    before the sweep reached a single global bicluster."""

    cells: list = field(default_factory=list)
    capped: bool = False

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def __getitem__(self, idx):
        return self.cells[idx]

    @property
    def total_outer_iters(self) -> int:
        return sum(c.outer_iters for c in self.cells)


def _cell(l, k, res, keep_u):
    return GridCellResult(
        l=l,
        k=k,
        X_filled=res.X_filled,
        n_r=res.n_r,
        n_c=res.n_c,
        objective=res.objective,
        outer_iters=res.outer_iters,
        U=res.U if keep_u else None,
    )


def _run_row(X, Gr, Gc, penalty, grid, cfg, l, start, warm_start, keep_u):
    """Cells ``k = k0 + 1, ...`` of grid row ``l`` until the columns fuse.

    ``start`` is ``(U, inner_state, n_c)`` of the row's first cell. Returns
    ``(cells, capped)``.
    """
    U_prev, state, n_c = start
    if n_c == 1:
        return [], False
    inner = ConvexBiclusterADMM(Gr, Gc, cfg)
    inner.state = state
    cells = []
    for k in range(grid.k0 + 1, grid.k_max + 1):
        if not warm_start:
            inner.reset()
            U_prev = None
        res = co_cluster_missing(
            X, 2.0**l, 2.0**k, Gr, Gc, penalty=penalty, cfg=cfg, U0=U_prev, inner=inner
        )
        cells.append(_cell(l, k, res, keep_u))
        U_prev = res.U
        if res.n_c == 1:
            return cells, False
    return cells, True


def sweep(
    X: ObservedMatrix,
    Gr,
    Gc,
    penalty=None,
    grid: ScaleGrid | None = None,
    cfg: SolverConfig | None = None,
    warm_start: bool = True,
    n_jobs: int = 1,
    keep_u: bool = False,
    on_cell=None,
) -> SweepResult:
    """Solve the co-clustering problem on the dyadic grid until full fusion.

    For each row exponent ``l`` (starting at ``grid.l0``) the column exponent
    climbs from ``grid.k0`` until the columns fuse into one group. The sweep
    ends after the first row whose opening cell already has all rows fused.

    With ``warm_start`` every cell starts from a neighbouring solution: the
    opening cell ``(l, k0)`` from ``(l - 1, k0)`` and every other cell from
    its left neighbour ``(l, k - 1)``. The opening cells are therefore solved
    first, as one chain; the rest of each grid row depends only on its
    opening cell, and with ``n_jobs > 1`` the rows are completed in parallel
    processes. The result is identical for any ``n_jobs``. Without
    ``warm_start`` every cell starts from the mean-filled data.

    ``on_cell`` is called with every recorded cell, in grid order
    (``l`` major, ``k`` minor).
    """
    penalty = SnowflakePenalty() if penalty is None else penalty
    grid = ScaleGrid() if grid is None else grid
    cfg = SolverConfig() if cfg is None else cfg
    _check_graphs(X, Gr, Gc)

    # opening cells, chained along the first grid column
    openings = []
    inner = ConvexBiclusterADMM(Gr, Gc, cfg)
    U_prev = None
    rows_fused = False
    for l in range(grid.l0, grid.l_max + 1):
        if not warm_start:
            inner.reset()
            U_prev = None
        res = co_cluster_missing(
            X, 2.0**l, 2.0**grid.k0, Gr, Gc, penalty=penalty, cfg=cfg, U0=U_prev, inner=inner
        )
        openings.append((_cell(l, grid.k0, res, keep_u), (res.U, inner.state, res.n_c)))
        U_prev = res.U
        if res.n_r == 1:
            rows_fused = True
            break

    args = (X, Gr, Gc, penalty, grid, cfg)
    if n_jobs <= 1 or len(openings) == 1:
        rows = [_run_row(*args, c.l, start, warm_start, keep_u) for c, start in openings]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_run_row, *args, c.l, start, warm_start, keep_u) for c, start in openings]
            rows = [f.result() for f in futures]

    result = SweepResult()
    for (first, _), (cells, row_capped) in zip(openings, rows):
        if row_capped:
            logger.warning("column cap k_max=%d reached at l=%d before columns fused", grid.k_max, first.l)
            result.capped = True
        for cell in [first, *cells]:
            result.cells.append(cell)
            if on_cell is not None:
                on_cell(cell)
    if not rows_fused:
        logger.warning("row cap l_max=%d reached before rows fused", grid.l_max)
        result.capped = True
    return result


def write_manifest(cells, target):
    """One ``l,k,n_r,n_c,objective`` line per cell."""
    text = "".join(f"{c.l},{c.k},{c.n_r},{c.n_c},{c.objective:.17g}\n" for c in cells)
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w") as fh:
            fh.write(text)

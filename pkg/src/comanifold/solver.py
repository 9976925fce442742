"""Missing-data co-clustering by majorization-minimization.

Each MM step fills the unobserved entries with the current estimate, fixes
per-edge weights from the concave penalty's slope, and solves the resulting
weighted convex biclustering problem

    min_U 1/2 ||Xt - U||_F^2 + gamma_r sum_(i,j) wr_ij ||U_i. - U_j.||
                             + gamma_c sum_(i,j) wc_ij ||U_.i - U_.j||

with ADMM (one split variable per row edge and per column edge).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import DisconnectedGraphError, NeighborGraph, is_connected
from .incomplete import ObservedMatrix, fill_with, observed_mean, project_observed
from .penalty import SnowflakePenalty, edge_differences, mm_weights

logger = logging.getLogger(__name__)

RHO_RANGE = 1e4
# extra inner re-solves (each 100x tighter) allowed per MM step
MAX_TIGHTEN = 3
# roundoff allowance when checking that an MM step did not increase the objective
DESCENT_SLACK = 1e-13
MIN_INNER_TOL = 1e-14
# inexact MM: early inner solves only need to be accurate relative to the
# objective change of the previous outer step (never looser than INEXACT_CAP)
INEXACT_RATIO = 1e-2
INEXACT_CAP = 1e-4
# incidence products below this many multiply-adds use dense arrays
DENSE_WORK = 300_000
# edges weighted beyond LOCK_MARGIN * (1 + ||X_tilde||_F) are merged before the inner solve
LOCK_MARGIN = 1e6


class ConvergenceError(RuntimeError):
    """The inner convex solver hit its iteration cap before meeting tolerance."""

    def __init__(self, message, U=None, residual=None):
        super().__init__(message)
        self.U = U
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    tol_outer: float = 1e-6
    tol_inner: float = 1e-8
    max_outer: int = 100
    max_inner: int = 2000
    fuse_tol: float = 1e-6
    # optional: MM also requires ||U_t+1 - U_t||_F <= tol_step * max(1, ||Xt||_F)
    tol_step: float | None = None
    rho: float = 1.0
    check_every: int = 10
    # Nesterov extrapolation of the MM anchor, kept only when it does not raise the objective
    accelerate: bool = True

    def __post_init__(self):
        if self.tol_step is not None and not self.tol_step > 0:
            raise ValueError("tol_step must be positive")
        for name in ("tol_outer", "tol_inner", "fuse_tol", "rho"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("max_outer", "max_inner", "check_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")


@dataclass(frozen=True)
class SolveResult:
    U: np.ndarray
    X_filled: np.ndarray
    n_r: int
    n_c: int
    objective_trace: list = field(default_factory=list)
    outer_iters: int = 0
    converged: bool = True
    row_labels: np.ndarray | None = None
    col_labels: np.ndarray | None = None

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


# ---------------------------------------------------------------------------
# objective and surrogate
# ---------------------------------------------------------------------------


def objective_value(U, X: ObservedMatrix, Gr, Gc, gamma_r, gamma_c, penalty=None) -> float:
    penalty = SnowflakePenalty() if penalty is None else penalty
    U = np.asarray(U, dtype=float)
    fit = 0.5 * np.sum((project_observed(X) - U * X.mask) ** 2)
    Jr = np.sum(penalty.omega(edge_differences(U, Gr, "rows")))
    Jc = np.sum(penalty.omega(edge_differences(U, Gc, "columns")))
    return float(fit + gamma_r * Jr + gamma_c * Jc)


def surrogate_value(U, U_anchor, X: ObservedMatrix, Gr, Gc, gamma_r, gamma_c, penalty=None) -> float:
    """MM majorizer of :func:`objective_value` anchored at ``U_anchor``.

    The additive constant is kept so that the surrogate touches the objective
    at the anchor.
    """
    penalty = SnowflakePenalty() if penalty is None else penalty
    U = np.asarray(U, dtype=float)
    Xt = fill_with(X, U_anchor)
    total = 0.5 * np.sum((Xt - U) ** 2)
    for gamma, G, mode in ((gamma_r, Gr, "rows"), (gamma_c, Gc, "columns")):
        d_anchor = edge_differences(U_anchor, G, mode)
        w = np.asarray(penalty.omega_deriv(d_anchor))
        kappa = np.sum(penalty.omega(d_anchor) - w * d_anchor)
        total += gamma * (np.sum(w * edge_differences(U, G, mode)) + kappa)
    return float(total)


def convex_objective(U, X_tilde, gamma_r, gamma_c, wr, wc, Gr, Gc) -> float:
    """Weighted convex biclustering objective with full quadratic fidelity."""
    U = np.asarray(U, dtype=float)
    return float(
        0.5 * np.sum((np.asarray(X_tilde) - U) ** 2)
        + gamma_r * np.dot(wr, edge_differences(U, Gr, "rows"))
        + gamma_c * np.dot(wc, edge_differences(U, Gc, "columns"))
    )


# ---------------------------------------------------------------------------
# fused groups
# ---------------------------------------------------------------------------


def count_fused_groups(U, G: NeighborGraph, mode: str = "rows", fuse_tol: float = 1e-6):
    """Number of groups of rows (columns) of ``U`` fused along edges of ``G``.

    Two nodes joined by an edge are fused when their rows (columns) differ by
    at most ``fuse_tol`` in Euclidean norm; groups are the connected
    components of the fused edges. Returns ``(count, labels)``.
    """
    if not fuse_tol > 0:
        raise ValueError("fuse_tol must be positive")
    n = G.node_count
    d = edge_differences(U, G, mode)
    keep = d <= fuse_tol
    A = coo_matrix((np.ones(int(keep.sum())), (G.heads[keep], G.tails[keep])), shape=(n, n))
    count, labels = connected_components(A, directed=False)
    return int(count), labels


def _fuse_threshold(cfg: SolverConfig, X_tilde) -> float:
    spread = float(np.max(X_tilde) - np.min(X_tilde))
    return cfg.fuse_tol * (spread if spread > 0 else 1.0)


# ---------------------------------------------------------------------------
# inner convex solver
# ---------------------------------------------------------------------------


def _row_norms(V):
    return np.sqrt(np.einsum("ij,ij->i", V, V))


def _group_shrink(V, thresh):
    """Row-wise ``max(0, 1 - t/||v||) v``."""
    norms = _row_norms(V)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > thresh, 1.0 - thresh / norms, 0.0)
    return V * scale[:, None]


def _project_balls(Y, radius):
    """Row-wise projection onto balls of the given radii."""
    norms = _row_norms(Y)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > radius, radius / norms, 1.0)
    return Y * scale[:, None]


class _ModeReduction:
    """One mode of the convex problem after merging hard-fused groups.

    Nodes joined by locked edges form groups of sizes ``s``. In the scaled
    variables ``sqrt(s_g) * u_g`` the quadratic fidelity keeps unit weights,
    and an edge between groups ``g`` and ``h`` measures
    ``u_g / sqrt(s_g) - u_h / sqrt(s_h)``. Parallel edges between the same
    pair of groups are merged by adding their weights. Singleton groups
    reproduce the plain incidence matrix.
    """

    def __init__(self, G: NeighborGraph, locked):
        n = G.node_count
        heads, tails = G.heads, G.tails
        if locked.any():
            A = coo_matrix((np.ones(int(locked.sum())), (heads[locked], tails[locked])), shape=(n, n))
            n_groups, labels = connected_components(A, directed=False)
        else:
            n_groups, labels = n, np.arange(n)
        self.labels = labels
        self.sizes = np.bincount(labels, minlength=n_groups).astype(float)
        self.root = np.sqrt(self.sizes)
        self.indicator = csr_matrix((np.ones(n), (labels, np.arange(n))), shape=(n_groups, n))

        gh, gt = labels[heads], labels[tails]
        inter = gh != gt
        lo = np.minimum(gh, gt)[inter]
        hi = np.maximum(gh, gt)[inter]
        pairs, self.edge_of = np.unique(lo * n_groups + hi, return_inverse=True)
        self.pairs = pairs
        self.inter = inter
        self.heads, self.tails = pairs // n_groups, pairs % n_groups
        n_edges = pairs.size
        rows = np.concatenate([np.arange(n_edges), np.arange(n_edges)])
        cols = np.concatenate([self.heads, self.tails])
        vals = np.concatenate([1.0 / self.root[self.heads], -1.0 / self.root[self.tails]])
        self.Phi = csr_matrix((vals, (rows, cols)), shape=(n_edges, n_groups))
        self.PhiT = self.Phi.T.tocsr()
        self._dense = None
        self.eig, self.Q = np.linalg.eigh((self.PhiT @ self.Phi).toarray())
        np.maximum(self.eig, 0.0, out=self.eig)

    @property
    def n_groups(self) -> int:
        return self.sizes.size

    def operators(self, width: int):
        """``(Phi, Phi^T)`` for products with ``width`` columns.

        Small products are faster with dense arrays than through the
        sparse-matrix call overhead.
        """
        if self.pairs.size * self.n_groups * width > DENSE_WORK:
            return self.Phi, self.PhiT
        if self._dense is None:
            D = self.Phi.toarray()
            self._dense = (D, np.ascontiguousarray(D.T))
        return self._dense

    def coarsening(self, finer: "_ModeReduction"):
        """Maps from a finer grouping of the same nodes into this one, or ``None``.

        Returns ``(nodes, edges)``: ``nodes`` takes scaled group variables
        to scaled group variables (size-weighted means), ``edges`` sums the
        dual flow of finer edges into the merged edges, with a sign flip
        where the orientation reverses; edges inside a new group vanish.
        """
        gmap = np.zeros(finer.n_groups, dtype=np.intp)
        gmap[finer.labels] = self.labels
        if not np.array_equal(gmap[finer.labels], self.labels):
            return None
        g_new = self.n_groups
        nodes = csr_matrix(
            (finer.root / self.root[gmap], (gmap, np.arange(finer.n_groups))), shape=(g_new, finer.n_groups)
        )
        H, T = gmap[finer.heads], gmap[finer.tails]
        keep = np.flatnonzero(H != T)
        H, T = H[keep], T[keep]
        target = np.searchsorted(self.pairs, np.minimum(H, T) * g_new + np.maximum(H, T))
        sign = np.where(H < T, 1.0, -1.0)
        edges = csr_matrix((sign, (target, keep)), shape=(self.pairs.size, finer.pairs.size))
        return nodes, edges

    def weights(self, w):
        """Merged per-edge weights of the reduced graph."""
        return np.bincount(self.edge_of, weights=w[self.inter], minlength=self.heads.size)

    def average(self, U, fused_edges):
        """Size-weighted average of unscaled group rows over reduced edges marked fused."""
        if not fused_edges.any():
            return U
        g = self.n_groups
        A = coo_matrix(
            (np.ones(int(fused_edges.sum())), (self.heads[fused_edges], self.tails[fused_edges])), shape=(g, g)
        )
        n_sets, sets = connected_components(A, directed=False)
        if n_sets == g:
            return U
        members = csr_matrix((self.sizes, (sets, np.arange(g))), shape=(n_sets, g))
        mass = np.bincount(sets, weights=self.sizes, minlength=n_sets)
        return (members @ U / mass[:, None])[sets]


class ConvexBiclusterADMM:
    """ADMM for weighted convex biclustering on fixed row/column graphs.

    Splits ``V = Phi_r U`` (row-edge differences) and ``Z = Phi_c U^T``
    (column-edge differences, stored edge-major). The ``U`` update is a
    Sylvester equation ``(I + rho Lr) U + rho U Lc = R`` solved exactly in the
    eigenbases of the two graph Laplacians.

    Edges whose weight exceeds ``LOCK_MARGIN * (1 + ||X_tilde||_F)`` cannot
    separate at the optimum (no dual certificate comes close to needing
    that much), so their endpoints are merged before solving; the concave
    penalty's slope at zero puts every already-fused edge in this class.
    Factorizations are cached per group structure and split/dual variables
    persist between calls with the same structure, so successive MM steps
    warm start.
    """

    def __init__(self, Gr: NeighborGraph, Gc: NeighborGraph, cfg: SolverConfig | None = None):
        self.Gr, self.Gc = Gr, Gc
        self.cfg = SolverConfig() if cfg is None else cfg
        self._cache = {}
        self.state = None

    def reset(self):
        self.state = None

    def _start(self, rr, rc, target, diff_r, diff_c):
        """Initial ``(rho, V, Z, Lam, Mu)``, carried over from the previous call when possible.

        Same grouping: reuse as is. Coarser grouping in both modes (new
        fusions locked): aggregate the previous iterate and dual flows.
        Otherwise start the split variables at the target's differences.
        """
        prev = self.state
        if prev is None:
            return self.cfg.rho, diff_r(target), diff_c(target), None, None
        p_rr, p_rc, rho, U, V, Z, Lam, Mu = prev
        if p_rr is rr and p_rc is rc:
            return rho, V, Z, Lam, Mu
        maps_r = rr.coarsening(p_rr)
        maps_c = rc.coarsening(p_rc)
        if maps_r is None or maps_c is None:
            return rho, diff_r(target), diff_c(target), None, None
        (nodes_r, edges_r), (nodes_c, edges_c) = maps_r, maps_c
        U = nodes_r @ (nodes_c @ U.T).T
        Lam = edges_r @ (nodes_c @ Lam.T).T
        Mu = edges_c @ (nodes_r @ Mu.T).T
        return rho, diff_r(U), diff_c(U), Lam, Mu

    def _reduction(self, mode, G, locked):
        key = (mode, np.packbits(locked).tobytes())
        red = self._cache.get(key)
        if red is None:
            if len(self._cache) >= 64:
                self._cache.clear()
            red = self._cache[key] = _ModeReduction(G, locked)
        return red

    def solve(self, X_tilde, gamma_r, gamma_c, wr, wc, tol=None):
        """Return ``(U, info)`` for the weighted convex biclustering problem.

        Stops once the splitting residual is below ``tol`` relative to
        ``||X_tilde||_F`` and either the duality gap or the change of the
        objective since the previous check is below ``tol`` relative to the
        objective. ``tol`` defaults to ``cfg.tol_inner``.
        """
        cfg = self.cfg
        tol = cfg.tol_inner if tol is None else tol
        X_tilde = np.asarray(X_tilde, dtype=float)
        a = gamma_r * np.asarray(wr, dtype=float)
        b = gamma_c * np.asarray(wc, dtype=float)
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("edge weights and cost parameters must be non-negative")

        norm_x = np.linalg.norm(X_tilde)
        lock = LOCK_MARGIN * (1.0 + norm_x)
        rr = self._reduction("rows", self.Gr, a >= lock)
        rc = self._reduction("columns", self.Gc, b >= lock)
        a_red, b_red = rr.weights(a), rc.weights(b)
        # scaled block means; the within-block scatter is a constant of the problem
        block = rr.indicator @ (rc.indicator @ X_tilde.T).T
        target = block / rr.root[:, None] / rc.root[None, :]
        offset = 0.5 * max(norm_x**2 - np.sum(target**2), 0.0)

        Pr, PrT = rr.operators(rc.n_groups)
        Pc, PcT = rc.operators(rr.n_groups)

        def diff_r(U):
            return Pr @ U

        def diff_c(U):
            return Pc @ U.T

        def adjoint(V, Z):
            return PrT @ V + (PcT @ Z).T

        def solve_u(R, rho):
            denom = 1.0 + rho * (rr.eig[:, None] + rc.eig[None, :])
            return rr.Q @ ((rr.Q.T @ R @ rc.Q) / denom) @ rc.Q.T

        def unscale(U):
            return U / rr.root[:, None] / rc.root[None, :]

        def snap(U, V, Z):
            # exactly-zero split variables mark fused reduced edges
            Ub = rr.average(unscale(U), ~np.any(V, axis=1))
            Ub = rc.average(Ub.T, ~np.any(Z, axis=1)).T
            return Ub * rr.root[:, None] * rc.root[None, :]

        def primal_value(U):
            return float(
                0.5 * np.sum((target - U) ** 2)
                + np.dot(a_red, _row_norms(diff_r(U)))
                + np.dot(b_red, _row_norms(diff_c(U)))
            )

        def expand(U):
            return unscale(U)[rr.labels][:, rc.labels]

        rho, V, Z, Lam, Mu = self._start(rr, rc, target, diff_r, diff_c)
        if Lam is None:
            Lam = np.zeros_like(V)
            Mu = np.zeros_like(Z)
        scale = max(1.0, norm_x)
        primal = dual = gap = pval_prev = np.inf
        U = target
        for it in range(1, cfg.max_inner + 1):
            U = solve_u(target + rho * adjoint(V - Lam, Z - Mu), rho)
            PU = diff_r(U)
            UP = diff_c(U)
            V_old, Z_old = V, Z
            V = _group_shrink(PU + Lam, a_red / rho)
            Z = _group_shrink(UP + Mu, b_red / rho)
            Lam = Lam + PU - V
            Mu = Mu + UP - Z

            if it % cfg.check_every and it != cfg.max_inner:
                continue
            primal_res = np.sqrt(np.sum((PU - V) ** 2) + np.sum((UP - Z) ** 2))
            dual_res = rho * np.linalg.norm(adjoint(V - V_old, Z - Z_old))
            primal, dual = primal_res, dual_res
            if primal_res <= tol * scale:
                # the certificate needs a snap and a dual evaluation, so it is
                # only computed once the splitting constraint is met
                resid = target - adjoint(_project_balls(rho * Lam, a_red), _project_balls(rho * Mu, b_red))
                dval = 0.5 * np.sum(target**2) - 0.5 * np.sum(resid**2)
                U_snap = snap(U, V, Z)
                pval = primal_value(U_snap)
                gap = pval - dval
                rel = tol * max(1.0, abs(pval + offset))
                settled = abs(pval - pval_prev) <= rel
                pval_prev = pval
                if gap <= rel or settled:
                    U = U_snap
                    break
            # residual balancing; the Laplacian eigenbases make a new rho free
            floor = tol * scale
            if primal_res > max(10.0 * dual_res, floor) and rho < cfg.rho * RHO_RANGE:
                rho *= 2.0
                Lam, Mu = Lam / 2.0, Mu / 2.0
            elif dual_res > max(10.0 * primal_res, floor) and rho > cfg.rho / RHO_RANGE:
                rho /= 2.0
                Lam, Mu = Lam * 2.0, Mu * 2.0
        else:
            self.state = (rr, rc, rho, U, V, Z, Lam, Mu)
            raise ConvergenceError(
                f"convex biclustering did not converge in {cfg.max_inner} iterations "
                f"(duality gap {gap:.3e}, primal residual {primal:.3e})",
                U=expand(snap(U, V, Z)),
                residual=primal,
            )
        self.state = (rr, rc, rho, U, V, Z, Lam, Mu)
        info = {
            "iterations": it,
            "gap": gap,
            "primal_residual": primal,
            "dual_residual": dual,
            "rho": rho,
            "groups": (rr.n_groups, rc.n_groups),
        }
        return expand(U), info


def convex_bicluster(X_tilde, gamma_r, gamma_c, wr, wc, Gr, Gc, cfg: SolverConfig | None = None):
    """Solve one weighted convex biclustering problem from a cold start.

    Returns ``(U, n_r, n_c)`` where the counts are fused groups of rows and
    columns of ``U``.
    """
    cfg = SolverConfig() if cfg is None else cfg
    X_tilde = np.asarray(X_tilde, dtype=float)
    if np.any(np.asarray(wr) <= 0) or np.any(np.asarray(wc) <= 0):
        raise ValueError("edge weights must be positive")
    U, _ = ConvexBiclusterADMM(Gr, Gc, cfg).solve(X_tilde, gamma_r, gamma_c, wr, wc)
    tol = _fuse_threshold(cfg, X_tilde)
    n_r, _ = count_fused_groups(U, Gr, "rows", tol)
    n_c, _ = count_fused_groups(U, Gc, "columns", tol)
    return U, n_r, n_c


# ---------------------------------------------------------------------------
# MM outer loop
# ---------------------------------------------------------------------------


def _check_graphs(X: ObservedMatrix, Gr: NeighborGraph, Gc: NeighborGraph):
    m, n = X.shape
    if Gr.node_count != m or Gc.node_count != n:
        raise ValueError(
            f"graphs have {Gr.node_count} x {Gc.node_count} nodes, matrix is {m} x {n}"
        )
    for name, G in (("row", Gr), ("column", Gc)):
        if not is_connected(G):
            raise DisconnectedGraphError(
                f"{name} graph is not connected (Assumption 1 requires connected row and column graphs)"
            )


def co_cluster_missing(
    X: ObservedMatrix,
    gamma_r: float,
    gamma_c: float,
    Gr: NeighborGraph,
    Gc: NeighborGraph,
    penalty=None,
    cfg: SolverConfig | None = None,
    U0=None,
    inner: ConvexBiclusterADMM | None = None,
    trace_file=None,
) -> SolveResult:
    """Minimize the missing-data co-clustering objective by MM.

    Parameters
    ----------
    X : ObservedMatrix
        Partially observed data.
    gamma_r, gamma_c : float
        Row and column cost parameters.
    Gr, Gc : NeighborGraph
        Connected row and column graphs.
    penalty : SnowflakePenalty or LinearPenalty, optional
        Concave penalty; defaults to the snowflake with ``epsilon = 1e-12``.
    cfg : SolverConfig, optional
    U0 : array, optional
        Starting point. Defaults to the data with unobserved entries set to
        the observed mean; the first MM weights are taken from it.
    inner : ConvexBiclusterADMM, optional
        Reuse a factored inner solver (and its warm-start state).
    trace_file : path or file, optional
        Receives ``iter,objective,n_r,n_c`` lines, one per outer iteration.

    Returns
    -------
    SolveResult
    """
    penalty = SnowflakePenalty() if penalty is None else penalty
    cfg = SolverConfig() if cfg is None else cfg
    if gamma_r < 0 or gamma_c < 0:
        raise ValueError("cost parameters must be non-negative")
    _check_graphs(X, Gr, Gc)
    if inner is None:
        inner = ConvexBiclusterADMM(Gr, Gc, cfg)

    if U0 is None:
        U = fill_with(X, np.full(X.shape, observed_mean(X)))
    else:
        U = np.array(U0, dtype=float)
        if U.shape != X.shape:
            raise ValueError(f"U0 has shape {U.shape}, expected {X.shape}")

    trace = [objective_value(U, X, Gr, Gc, gamma_r, gamma_c, penalty)]
    lines = []
    converged = False
    U_prev = U
    theta = 1.0
    rel = np.inf
    for t in range(1, cfg.max_outer + 1):
        f_old = trace[-1]
        anchor, f_anchor = U, f_old
        if cfg.accelerate:
            theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta**2))
            beta = (theta - 1.0) / theta_next
            if beta > 0:
                Y = U + beta * (U - U_prev)
                f_Y = objective_value(Y, X, Gr, Gc, gamma_r, gamma_c, penalty)
                if f_Y <= f_old:
                    anchor, f_anchor = Y, f_Y
                    theta = theta_next
                else:
                    theta = 1.0
            else:
                theta = theta_next
        X_tilde = fill_with(X, anchor)
        wr = mm_weights(anchor, Gr, "rows", penalty)
        wc = mm_weights(anchor, Gc, "columns", penalty)
        # an inexact inner solve can overshoot by its tolerance; tighten until
        # the step is a genuine descent step or precision runs out
        inner_tol = max(cfg.tol_inner, min(INEXACT_CAP, INEXACT_RATIO * rel))
        exact = inner_tol <= cfg.tol_inner
        for attempt in range(MAX_TIGHTEN + 1):
            try:
                U_new, _ = inner.solve(X_tilde, gamma_r, gamma_c, wr, wc, tol=inner_tol)
            except ConvergenceError as exc:
                if attempt == 0:
                    raise
                U_new = exc.U
            f_new = objective_value(U_new, X, Gr, Gc, gamma_r, gamma_c, penalty)
            if f_new <= f_anchor + DESCENT_SLACK * max(1.0, abs(f_anchor)):
                break
            inner_tol = max(inner_tol * 1e-2, MIN_INNER_TOL)
            exact = exact or inner_tol <= cfg.tol_inner
        else:
            logger.debug("MM step did not decrease the objective; stopping at t=%d", t)
            converged = True
            t -= 1
            break
        step_ok = cfg.tol_step is None or (
            np.linalg.norm(U_new - U) <= cfg.tol_step * max(1.0, np.linalg.norm(X_tilde))
        )
        U_prev, U = U, U_new
        trace.append(f_new)
        if trace_file is not None:
            tol = _fuse_threshold(cfg, X_tilde)
            n_r, _ = count_fused_groups(U, Gr, "rows", tol)
            n_c, _ = count_fused_groups(U, Gc, "columns", tol)
            lines.append(f"{t},{f_new:.17g},{n_r},{n_c}")
        rel = abs(f_old - f_new) / max(1.0, abs(f_old))
        if exact and rel < cfg.tol_outer and step_ok:
            converged = True
            break
    else:
        logger.warning(
            "MM stopped at max_outer=%d (gamma_r=%g, gamma_c=%g)", cfg.max_outer, gamma_r, gamma_c
        )

    X_filled = fill_with(X, U)
    tol = _fuse_threshold(cfg, X_filled)
    n_r, row_labels = count_fused_groups(U, Gr, "rows", tol)
    n_c, col_labels = count_fused_groups(U, Gc, "columns", tol)
    if trace_file is not None:
        _write_lines(trace_file, lines)
    return SolveResult(
        U=U,
        X_filled=X_filled,
        n_r=n_r,
        n_c=n_c,
        objective_trace=trace,
        outer_iters=t,
        converged=converged,
        row_labels=row_labels,
        col_labels=col_labels,
    )


def _write_lines(target, lines):
    text = "".join(line + "\n" for line in lines)
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w") as fh:
            fh.write(text)

"""Command-line front end: generate, mask, solve, embed and eval.

Every numeric output is written with 17 significant digits, so two runs
with the same flags produce byte-identical files. Exit codes: 0 on
success, 1 for invalid input or configuration, 2 when a numerical stage
fails.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fileio
from .datasets import VARIANTS, LinkageSpec, generate
from .embedding import embed_distances
from .evaluation import adjusted_rand_index, kmeans
from .graph import NeighborGraph, is_connected, knn_graph
from .incomplete import MaskSpec, ObservedMatrix, apply_mask
from .metric import DistanceAccumulator
from .penalty import LinearPenalty, SnowflakePenalty
from .pipeline import diffusion_maps_missing
from .solver import SolverConfig, co_cluster_missing
from .sweep import ScaleGrid, sweep, write_manifest

OUTPUT_ENV = "COMANIFOLD_OUTPUT_DIR"

logger = logging.getLogger("comanifold")


class UsageError(Exception):
    """Invalid flags, configuration values or input files (exit code 1)."""


class StageError(Exception):
    """A numerical stage failed (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _available_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass
class RunConfig:
    """Everything one ``embed`` run depends on."""

    input: Path | None = None
    variant: str = "linkage2"
    rows: int = 60
    cols: int = 80
    data_seed: int = 0
    missing_fraction: float = 0.0
    mask_seed: int = 0
    k_rows: int | None = None
    k_cols: int | None = None
    row_graph: Path | None = None
    col_graph: Path | None = None
    penalty: str = "snowflake"
    epsilon: float = 1e-12
    l0: int = -4
    k0: int = -4
    l_max: int = 20
    k_max: int = 20
    alpha: float = -0.5
    dim: int = 3
    method: str = "comanifold"
    tol_outer: float = 1e-6
    tol_inner: float = 1e-8
    max_outer: int = 100
    max_inner: int = 2000
    warm_start: bool = True
    jobs: int = field(default_factory=_available_workers)
    out: Path | None = None

    def validate(self):
        for name in ("input", "row_graph", "col_graph"):
            path = getattr(self, name)
            if path is not None and not path.is_file():
                raise UsageError(f"{name} file {path} does not exist")
        if self.out is None:
            raise UsageError(f"no output directory: pass --out or set {OUTPUT_ENV}")
        if not self.out.is_dir():
            raise UsageError(f"output directory {self.out} does not exist")
        if self.variant not in VARIANTS:
            raise UsageError(f"variant must be one of {VARIANTS}")
        if self.penalty not in ("snowflake", "linear"):
            raise UsageError("penalty must be 'snowflake' or 'linear'")
        if self.method not in ("comanifold", "diffusion"):
            raise UsageError("method must be 'comanifold' or 'diffusion'")
        if not 0.0 <= self.missing_fraction < 1.0:
            raise UsageError("missing fraction must lie in [0, 1)")
        if self.dim < 1:
            raise UsageError("embedding dimension must be at least 1")
        if self.jobs < 1:
            raise UsageError("jobs must be at least 1")
        for name in ("k_rows", "k_cols"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise UsageError(f"{name} must be at least 1")
        try:
            self.grid()
            self.solver()
            self.make_penalty()
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def grid(self) -> ScaleGrid:
        return ScaleGrid(self.l0, self.k0, self.l_max, self.k_max)

    def solver(self) -> SolverConfig:
        return SolverConfig(
            tol_outer=self.tol_outer,
            tol_inner=self.tol_inner,
            max_outer=self.max_outer,
            max_inner=self.max_inner,
        )

    def make_penalty(self):
        return SnowflakePenalty(self.epsilon) if self.penalty == "snowflake" else LinearPenalty()


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(name: str, text: str, default):
    """Convert a config-file string to the type of the field's default."""
    try:
        if isinstance(default, bool):
            return _BOOL[text.lower()]
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except (KeyError, ValueError):
        raise UsageError(f"config key {name!r}: cannot parse {text!r}") from None
    if name in ("input", "out", "row_graph", "col_graph"):
        return Path(text)
    if name in ("k_rows", "k_cols"):
        try:
            return None if text.lower() == "auto" else int(text)
        except ValueError:
            raise UsageError(f"config key {name!r}: cannot parse {text!r}") from None
    return text


def load_run_config(args) -> RunConfig:
    """Defaults, then the optional ``key=value`` config file, then explicit flags."""
    cfg = RunConfig()
    env_out = os.environ.get(OUTPUT_ENV)
    if env_out:
        cfg.out = Path(env_out)
    if args.config is not None:
        try:
            items = fileio.read_keyvalue(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for key, text in items.items():
            name = key.replace("-", "_")
            if not hasattr(cfg, name):
                raise UsageError(f"unknown config key {key!r}")
            setattr(cfg, name, _coerce(name, text, getattr(RunConfig(), name)))
    for name in vars(cfg):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _output_dir(args) -> Path:
    out = args.out if args.out is not None else os.environ.get(OUTPUT_ENV)
    if out is None:
        raise UsageError(f"no output directory: pass --out or set {OUTPUT_ENV}")
    out = Path(out)
    if not out.is_dir():
        raise UsageError(f"output directory {out} does not exist")
    return out


def _read_input(path) -> ObservedMatrix:
    try:
        return fileio.read_matrix(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _linkage_spec(variant, rows, cols, seed, noise=None, separation=None) -> LinkageSpec:
    kwargs = {} if separation is None else {"cluster_separation": separation}
    try:
        return LinkageSpec(n_rows=rows, n_cols=cols, variant=variant, seed=seed, noise=noise, **kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def write_sidecar(path, row_meta: dict, col_meta: dict):
    """Ground truth for both modes in one table: ``mode,index,<fields>``.

    Fields that do not apply to a mode are ``NA``.
    """
    names = list(dict.fromkeys([*row_meta, *col_meta]))
    lines = [",".join(["mode", "index", *names])]
    for mode, meta in (("row", row_meta), ("column", col_meta)):
        n = len(next(iter(meta.values())))
        for i in range(n):
            fields = [mode, str(i + 1)]
            for name in names:
                if name not in meta:
                    fields.append(fileio.NA)
                    continue
                v = meta[name][i]
                fields.append(str(int(v)) if np.issubdtype(type(v), np.integer) else fileio.format_number(v))
            lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def read_truth(path, mode: str = "row", column: str = "label") -> np.ndarray:
    """Ground-truth labels of one mode from a sidecar written by :func:`write_sidecar`."""
    try:
        table = fileio.read_metadata(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if column not in table:
        raise UsageError(f"{path}: no column {column!r}")
    modes = table.get("mode")
    values = [v for i, v in enumerate(table[column]) if modes is None or modes[i] == mode]
    if not values or any(v == fileio.NA for v in values):
        raise UsageError(f"{path}: column {column!r} has no {mode} labels")
    return np.array(values)


def cmd_generate(args) -> int:
    out = _output_dir(args)
    spec = _linkage_spec(args.variant, args.rows, args.cols, args.seed, args.noise, args.separation)
    X, row_meta, col_meta = generate(spec)
    name = args.name or spec.variant
    fileio.write_matrix(out / f"{name}.csv", X)
    write_sidecar(out / f"{name}_meta.csv", row_meta, col_meta)
    print(f"wrote {out / f'{name}.csv'} and {out / f'{name}_meta.csv'}")
    return 0


def cmd_mask(args) -> int:
    X = _read_input(args.input)
    if not X.mask.all():
        raise UsageError(f"{args.input} already has missing entries; mask a complete matrix")
    try:
        masked = apply_mask(X.values, MaskSpec(args.fraction, args.seed))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    fileio.write_matrix(args.output, masked)
    print(f"wrote {args.output} ({X.shape[0] * X.shape[1] - masked.n_observed} entries hidden)")
    return 0


def _stage(name, fn, *args, **kwargs):
    """Run one pipeline stage; numerical failures are re-raised naming the stage."""
    try:
        return fn(*args, **kwargs)
    except (UsageError, StageError):
        raise
    except ValueError as exc:
        raise UsageError(f"{name}: {exc}") from exc
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageError(f"{name}: {exc}") from exc


def cmd_solve(args) -> int:
    out = _output_dir(args)
    X = _read_input(args.input)
    penalty = SnowflakePenalty(args.epsilon) if args.penalty == "snowflake" else LinearPenalty()
    try:
        cfg = SolverConfig(max_outer=args.max_outer, max_inner=args.max_inner)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    Gr = _stage("row graph", knn_graph, X, "rows", args.k_rows)
    Gc = _stage("column graph", knn_graph, X, "columns", args.k_cols)
    res = _stage(
        "co-clustering",
        co_cluster_missing,
        X,
        args.gamma_r,
        args.gamma_c,
        Gr,
        Gc,
        penalty=penalty,
        cfg=cfg,
        trace_file=out / "trace.csv",
    )
    fileio.write_matrix(out / "filled.csv", res.X_filled)
    fileio.write_matrix(out / "estimate.csv", res.U)
    fileio.write_keyvalue(
        out / "summary.txt",
        {
            "gamma_r": float(args.gamma_r),
            "gamma_c": float(args.gamma_c),
            "outer_iterations": res.outer_iters,
            "converged": str(res.converged).lower(),
            "n_r": res.n_r,
            "n_c": res.n_c,
            "objective": float(res.objective),
        },
    )
    print(f"n_r={res.n_r} n_c={res.n_c} objective={res.objective:.17g}")
    return 0


def _embed_input(cfg: RunConfig):
    if cfg.input is not None:
        X = _read_input(cfg.input)
        if cfg.missing_fraction > 0:
            if not X.mask.all():
                raise UsageError("missing_fraction needs a complete input matrix")
            X = _stage("mask", apply_mask, X.values, MaskSpec(cfg.missing_fraction, cfg.mask_seed))
        return X
    spec = _linkage_spec(cfg.variant, cfg.rows, cfg.cols, cfg.data_seed)
    values, _, _ = generate(spec)
    return _stage("mask", apply_mask, values, MaskSpec(cfg.missing_fraction, cfg.mask_seed))


def _mode_graph(cfg: RunConfig, X: ObservedMatrix, mode: str) -> NeighborGraph:
    """The k-NN graph of one mode, or the edge list forced by the config."""
    forced = cfg.row_graph if mode == "rows" else cfg.col_graph
    if forced is None:
        k = cfg.k_rows if mode == "rows" else cfg.k_cols
        return _stage(f"{mode[:-1]} graph", knn_graph, X, mode, k)
    n = X.shape[0] if mode == "rows" else X.shape[1]
    try:
        G = fileio.read_edges(forced, n)
    except ValueError as exc:
        raise UsageError(f"{forced}: {exc}") from None
    if not is_connected(G):
        raise UsageError(
            f"{forced}: the forced {mode[:-1]} graph is not connected "
            "(Assumption 1 requires connected row and column graphs)"
        )
    return G


def cmd_embed(args) -> int:
    cfg = load_run_config(args)
    out = cfg.out
    X = _embed_input(cfg)
    fileio.write_matrix(out / "input.csv", X)
    summary = {
        "method": cfg.method,
        "rows": X.shape[0],
        "cols": X.shape[1],
        "observed": X.n_observed,
        "missing_fraction": float(cfg.missing_fraction),
        "mask_seed": cfg.mask_seed,
        "dim": cfg.dim,
    }
    if cfg.method == "diffusion":
        row_emb = _stage("row embedding", diffusion_maps_missing, X, "rows", cfg.dim)
        col_emb = _stage("column embedding", diffusion_maps_missing, X, "columns", cfg.dim)
    else:
        Gr = _mode_graph(cfg, X, "rows")
        Gc = _mode_graph(cfg, X, "columns")
        fileio.write_edges(out / "row_graph.csv", Gr)
        fileio.write_edges(out / "col_graph.csv", Gc)
        acc = DistanceAccumulator(cfg.alpha)
        cells = _stage(
            "sweep",
            sweep,
            X,
            Gr,
            Gc,
            penalty=cfg.make_penalty(),
            grid=cfg.grid(),
            cfg=cfg.solver(),
            warm_start=cfg.warm_start,
            n_jobs=cfg.jobs,
            on_cell=acc,
        )
        write_manifest(cells, out / "manifest.csv")
        dist = acc.result()
        fileio.write_matrix(out / "row_distances.csv", dist.row_dist)
        fileio.write_matrix(out / "col_distances.csv", dist.col_dist)
        row_emb = _stage("row embedding", embed_distances, dist.row_dist, cfg.dim)
        col_emb = _stage("column embedding", embed_distances, dist.col_dist, cfg.dim)
        last = cells.cells[-1]
        summary.update(
            {
                "alpha": float(cfg.alpha),
                "cells": len(cells),
                "outer_iterations": cells.total_outer_iters,
                "capped": str(cells.capped).lower(),
                "last_l": last.l,
                "last_k": last.k,
                "last_objective": float(last.objective),
                "row_edges": Gr.n_edges,
                "col_edges": Gc.n_edges,
            }
        )
    fileio.write_matrix(out / "row_embedding.csv", row_emb.coordinates)
    fileio.write_matrix(out / "col_embedding.csv", col_emb.coordinates)
    summary["row_sigma"] = float(row_emb.sigma)
    summary["col_sigma"] = float(col_emb.sigma)
    for mode, emb in (("row", row_emb), ("col", col_emb)):
        for i, lam in enumerate(emb.eigenvalues, 1):
            summary[f"{mode}_eigenvalue_{i}"] = float(lam)
    fileio.write_keyvalue(out / "summary.txt", summary)
    print(f"wrote embeddings to {out}")
    return 0


def score_lines(points, truth, k, seeds, restarts, method, missing_fraction):
    """Report lines ``method,missing_fraction,seed,ari`` and a closing ``mean`` line."""
    fraction = fileio.format_number(missing_fraction) if missing_fraction is not None else fileio.NA
    lines, scores = [], []
    for seed in seeds:
        labels = kmeans(points, k, seed=seed, restarts=restarts).labels
        ari = adjusted_rand_index(truth, labels)
        scores.append(ari)
        lines.append(f"{method},{fraction},{seed},{fileio.format_number(ari)}")
    lines.append(f"{method},{fraction},mean,{fileio.format_number(np.mean(scores))}")
    return lines


def cmd_eval(args) -> int:
    try:
        points = np.loadtxt(args.embedding, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read embedding {args.embedding}: {exc}") from None
    truth = read_truth(args.truth, args.mode, args.column)
    if truth.size != points.shape[0]:
        raise UsageError(
            f"embedding has {points.shape[0]} points but the truth file has {truth.size} {args.mode} labels"
        )
    if not 1 <= args.k <= points.shape[0]:
        raise UsageError(f"k must lie in [1, {points.shape[0]}]")
    lines = _stage(
        "evaluation",
        score_lines,
        points,
        truth,
        args.k,
        args.seeds,
        args.restarts,
        args.method,
        args.missing_fraction,
    )
    text = "\n".join(lines) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="comanifold", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic matrix and its ground-truth sidecar")
    p.add_argument("--variant", choices=VARIANTS, default="linkage2")
    p.add_argument("--rows", type=int, default=100)
    p.add_argument("--cols", type=int, default=150)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=None, help="row-point jitter (variant default if omitted)")
    p.add_argument("--separation", type=float, default=None, help="distance between cloud centers (linkage2)")
    p.add_argument("--name", default=None, help="file stem (default: the variant)")
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default: ${OUTPUT_ENV})")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("mask", help="hide a random fraction of a complete matrix")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("solve", help="co-cluster at one (gamma_r, gamma_c) cell")
    p.add_argument("input", type=Path)
    p.add_argument("--gamma-r", type=float, required=True)
    p.add_argument("--gamma-c", type=float, required=True)
    p.add_argument("--k-rows", type=int, default=None)
    p.add_argument("--k-cols", type=int, default=None)
    p.add_argument("--penalty", choices=("snowflake", "linear"), default="snowflake")
    p.add_argument("--epsilon", type=float, default=1e-12)
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--max-inner", type=int, default=2000)
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default: ${OUTPUT_ENV})")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("embed", help="full pipeline: mask, graphs, sweep, metric, diffusion maps")
    p.add_argument("--config", type=Path, default=None, help="key=value file; flags override it")
    p.add_argument("--input", type=Path, default=None, help="matrix file (NA marks missing entries)")
    p.add_argument("--variant", choices=VARIANTS, default=None, help="generate the input instead")
    p.add_argument("--rows", type=int, default=None)
    p.add_argument("--cols", type=int, default=None)
    p.add_argument("--data-seed", type=int, default=None)
    p.add_argument("--missing-fraction", type=float, default=None)
    p.add_argument("--mask-seed", type=int, default=None)
    p.add_argument("--k-rows", type=int, default=None)
    p.add_argument("--k-cols", type=int, default=None)
    p.add_argument("--row-graph", type=Path, default=None, help="edge list (1-based i,j) replacing the row k-NN graph")
    p.add_argument("--col-graph", type=Path, default=None, help="edge list replacing the column k-NN graph")
    p.add_argument("--penalty", choices=("snowflake", "linear"), default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--l0", type=int, default=None)
    p.add_argument("--k0", type=int, default=None)
    p.add_argument("--l-max", type=int, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--method", choices=("comanifold", "diffusion"), default=None)
    p.add_argument("--max-outer", type=int, default=None)
    p.add_argument("--max-inner", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: available CPUs)")
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default: ${OUTPUT_ENV})")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval", help="k-means on an embedding, scored by ARI against ground truth")
    p.add_argument("embedding", type=Path)
    p.add_argument("truth", type=Path)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--mode", choices=("row", "column"), default="row")
    p.add_argument("--column", default="label", help="sidecar column holding the labels")
    p.add_argument("--method", default="comanifold", help="method name for the report")
    p.add_argument("--missing-fraction", type=float, default=None)
    p.add_argument("--output", type=Path, default=None, help="report file (default: stdout)")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

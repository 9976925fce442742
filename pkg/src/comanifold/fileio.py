"""Plain-text file formats: matrices with ``NA`` holes, edge lists, key=value files."""

from __future__ import annotations

import csv
import io

import numpy as np

from .incomplete import ObservedMatrix

NA = "NA"


def format_number(x) -> str:
    """17 significant digits: round-trips a double exactly."""
    return f"{float(x):.17g}"


def read_matrix(path, header: bool = False) -> ObservedMatrix:
    """Read a comma-separated matrix; ``NA`` fields become unobserved entries."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(f.strip() for f in r)]
    if header:
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    values = np.zeros((len(rows), width))
    mask = np.ones((len(rows), width), dtype=bool)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {i + 1} has {len(row)} fields, expected {width}")
        for j, field in enumerate(row):
            field = field.strip()
            if field == NA:
                mask[i, j] = False
            else:
                try:
                    values[i, j] = float(field)
                except ValueError:
                    raise ValueError(f"{path}: cannot parse {field!r} at row {i + 1}, column {j + 1}") from None
    return ObservedMatrix(values, mask)


def matrix_to_text(values, mask=None, header=None) -> str:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    out = io.StringIO()
    if header is not None:
        out.write(",".join(header) + "\n")
    for i, row in enumerate(values):
        fields = [
            NA if (mask is not None and not mask[i, j]) else format_number(x) for j, x in enumerate(row)
        ]
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def write_matrix(path, X, header=None):
    """Write a dense array or an :class:`ObservedMatrix` (unobserved entries as ``NA``)."""
    if isinstance(X, ObservedMatrix):
        text = matrix_to_text(X.values, X.mask, header)
    else:
        text = matrix_to_text(X, None, header)
    with open(path, "w") as fh:
        fh.write(text)


def write_edges(path, G):
    """``i,j`` per line, 1-indexed, lexicographic."""
    with open(path, "w") as fh:
        for i, j in sorted(G.edges):
            fh.write(f"{i + 1},{j + 1}\n")


def read_edges(path, node_count: int):
    from .graph import NeighborGraph

    pairs = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                i, j = line.split(",")
                pairs.append((int(i) - 1, int(j) - 1))
    return NeighborGraph.from_pairs(node_count, pairs)


def write_metadata(path, meta: dict):
    """Columns of per-node metadata with a header row; the first column is the 1-based index."""
    names = list(meta)
    n = len(next(iter(meta.values())))
    with open(path, "w") as fh:
        fh.write(",".join(["index"] + names) + "\n")
        for i in range(n):
            fields = [str(i + 1)]
            for name in names:
                v = meta[name][i]
                fields.append(str(int(v)) if np.issubdtype(type(v), np.integer) else format_number(v))
            fh.write(",".join(fields) + "\n")


def read_metadata(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no metadata rows")
    return {name: [r[name] for r in rows] for name in reader.fieldnames}


def read_keyvalue(path) -> dict:
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_keyvalue(path, items: dict):
    with open(path, "w") as fh:
        for key, value in items.items():
            if isinstance(value, float):
                value = format_number(value)
            fh.write(f"{key}={value}\n")

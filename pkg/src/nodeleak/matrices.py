"""Pairwise distance matrices and their element-wise differences.

Every matrix carries an explicit node order (ascending node ids).  Matrices
are only ever combined when their orders are identical; nothing re-aligns by
position, because silent misalignment is exactly the bug this guards against.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np


def as_node_order(ids: Sequence[int] | np.ndarray) -> np.ndarray:
    """Validate and return a strictly ascending int64 node-id array."""
    order = np.asarray(ids, dtype=np.int64)
    if order.ndim != 1:
        raise ValueError("node order must be one-dimensional")
    if order.size > 1 and not np.all(np.diff(order) > 0):
        raise ValueError("node order must be strictly ascending")
    return order


def same_order(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and bool(np.array_equal(a, b))


def _check_square(order: np.ndarray, values: np.ndarray, what: str) -> None:
    n = order.shape[0]
    if values.shape != (n, n):
        raise ValueError(f"{what}: values shape {values.shape} does not match "
                         f"{n} nodes")


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise-distance matrix with zero diagonal."""

    node_order: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "node_order", as_node_order(self.node_order))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        _check_square(self.node_order, self.values, "DistanceMatrix")

    @property
    def n_nodes(self) -> int:
        return self.node_order.shape[0]


@dataclass(frozen=True)
class DiffMatrix:
    """Element-wise difference of two distance matrices (diagonal ignored)."""

    node_order: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "node_order", as_node_order(self.node_order))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        _check_square(self.node_order, self.values, "DiffMatrix")

    @property
    def n_nodes(self) -> int:
        return self.node_order.shape[0]


def cosine_distance_matrix(embedding) -> DistanceMatrix:
    """All-pairs cosine distances 1 - u.v/(|u||v|) of an embedding's rows.

    Raises on zero-norm rows (engines guarantee non-zero vectors upstream).
    """
    vectors = embedding.vectors
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0.0):
        bad = int(embedding.node_order[int(np.argmin(norms))])
        raise ValueError(f"zero-norm embedding row for node {bad}")
    unit = vectors / norms[:, None]
    sim = unit @ unit.T
    np.clip(sim, -1.0, 1.0, out=sim)
    dist = 1.0 - sim
    dist = (dist + dist.T) * 0.5  # kill float asymmetry from the matmul
    np.fill_diagonal(dist, 0.0)
    np.clip(dist, 0.0, 2.0, out=dist)
    return DistanceMatrix(embedding.node_order.copy(), dist)


def diff_matrix(original: DistanceMatrix, reduced: DistanceMatrix) -> DiffMatrix:
    """original - reduced, element-wise; node orders must be identical."""
    if not same_order(original.node_order, reduced.node_order):
        raise ValueError("node order mismatch between distance matrices")
    return DiffMatrix(original.node_order.copy(), original.values - reduced.values)


def drop_node(matrix, v: int):
    """Matrix restricted to all nodes except ``v`` (same type back)."""
    order = matrix.node_order
    pos = int(np.searchsorted(order, v))
    if pos >= order.shape[0] or order[pos] != v:
        raise ValueError(f"node {v} not in matrix order")
    keep = np.ones(order.shape[0], dtype=bool)
    keep[pos] = False
    values = matrix.values[np.ix_(keep, keep)]
    return type(matrix)(order[keep], values)


def average_matrices(matrices: Sequence[DistanceMatrix]) -> DistanceMatrix:
    """Entry-wise mean of distance matrices sharing one node order."""
    if not matrices:
        raise ValueError("no matrices to average")
    first = matrices[0]
    for m in matrices[1:]:
        if not same_order(first.node_order, m.node_order):
            raise ValueError("node order mismatch in matrices to average")
    mean = np.mean([m.values for m in matrices], axis=0)
    return DistanceMatrix(first.node_order.copy(), mean)


def offdiagonal_values(matrix) -> np.ndarray:
    """Strictly-off-diagonal entries, each unordered pair once."""
    n = matrix.n_nodes
    iu = np.triu_indices(n, k=1)
    return matrix.values[iu]


def abs_offdiagonal_difference(a: DistanceMatrix, b: DistanceMatrix) -> float:
    """Sum of |a - b| over off-diagonal entries, each unordered pair once."""
    if not same_order(a.node_order, b.node_order):
        raise ValueError("node order mismatch between distance matrices")
    iu = np.triu_indices(a.n_nodes, k=1)
    return float(np.abs(a.values[iu] - b.values[iu]).sum())


def save_distance_matrix(matrix: DistanceMatrix, sink: str | Path | IO[str]) -> None:
    """Text format: node count, node ids, then rows of the lower triangle
    (diagonal included) with full-precision floats."""
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fh:
            save_distance_matrix(matrix, fh)
        return
    n = matrix.n_nodes
    sink.write(f"{n}\n")
    sink.write(" ".join(str(int(v)) for v in matrix.node_order) + "\n")
    for i in range(n):
        sink.write(" ".join(repr(float(x)) for x in matrix.values[i, : i + 1]) + "\n")


def load_distance_matrix(source: str | Path | IO[str]) -> DistanceMatrix:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_distance_matrix(fh)
    lines = [ln.strip() for ln in source if ln.strip()]
    if not lines:
        raise ValueError("empty distance matrix file")
    n = int(lines[0])
    if len(lines) != n + 2:
        raise ValueError(f"expected {n + 2} lines, got {len(lines)}")
    order = np.asarray([int(t) for t in lines[1].split()], dtype=np.int64)
    if order.shape[0] != n:
        raise ValueError(f"expected {n} node ids, got {order.shape[0]}")
    values = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        row = [float(t) for t in lines[2 + i].split()]
        if len(row) != i + 1:
            raise ValueError(f"row {i}: expected {i + 1} entries, got {len(row)}")
        values[i, : i + 1] = row
        values[: i + 1, i] = row
    return DistanceMatrix(order, values)

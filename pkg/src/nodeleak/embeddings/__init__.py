"""Node embedding engines behind one interface.

All engines map every node of the input graph to a d-dimensional real
vector, deterministically in (graph, spec, seed).  The spectral engine
(``hope``) is a pure function of the graph alone; the stochastic engines
(``line``, ``node2vec``) vary with the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import IO

import numpy as np

from ..graph import Graph
from ..matrices import as_node_order

ALGORITHMS = ("hope", "line", "node2vec")


@dataclass(frozen=True)
class EmbedSpec:
    """Embedding algorithm choice plus its training parameters.

    Only the parameters of the selected algorithm matter; the rest are
    ignored.  ``beta=None`` picks half the reciprocal spectral radius of
    the adjacency matrix at training time.
    """

    algorithm: str
    dim: int = 128
    # hope
    beta: float | None = None
    # line (300 samples per edge and objective: below that, run-to-run
    # instability of the trained distances dominates real structural change)
    negatives: int = 5
    samples_per_edge: int = 300
    learning_rate: float = 0.025
    # node2vec (negatives/learning_rate shared with line)
    p: float = 1.0
    q: float = 1.0
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10
    epochs: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown embedding algorithm {self.algorithm!r}; "
                             f"expected one of {ALGORITHMS}")
        if self.dim < 2 or self.dim % 2 != 0:
            raise ValueError(f"dim must be a positive even integer, got {self.dim}")
        if self.beta is not None and self.beta <= 0:
            raise ValueError("beta must be positive")
        for name in ("negatives", "samples_per_edge", "walks_per_node",
                     "walk_length", "window", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("learning_rate", "p", "q"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def deterministic(self) -> bool:
        """True when training ignores the seed entirely."""
        return self.algorithm == "hope"

    def key(self) -> tuple:
        """Hashable identity for caching."""
        return tuple(getattr(self, f.name) for f in fields(self))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "EmbedSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown embedding parameters: {sorted(unknown)}")
        return cls(**data)

    def with_(self, **kwargs) -> "EmbedSpec":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Embedding:
    """Per-node real vectors, one row per node of ``node_order``."""

    node_order: np.ndarray
    vectors: np.ndarray
    algorithm: str = ""
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "node_order", as_node_order(self.node_order))
        vectors = np.asarray(self.vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D array")
        if vectors.shape[0] != self.node_order.shape[0]:
            raise ValueError(f"{vectors.shape[0]} rows for "
                             f"{self.node_order.shape[0]} nodes")
        object.__setattr__(self, "vectors", vectors)

    @property
    def n_nodes(self) -> int:
        return self.node_order.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index_of(self, node: int) -> int:
        pos = int(np.searchsorted(self.node_order, node))
        if pos >= self.n_nodes or self.node_order[pos] != node:
            raise ValueError(f"node {node} not in embedding")
        return pos

    def row(self, node: int) -> np.ndarray:
        return self.vectors[self.index_of(node)]

    def drop_node(self, node: int) -> "Embedding":
        """Embedding without the given node's row (the post-deletion view)."""
        pos = self.index_of(node)
        keep = np.ones(self.n_nodes, dtype=bool)
        keep[pos] = False
        return Embedding(self.node_order[keep], self.vectors[keep],
                         self.algorithm, self.seed)


def guard_zero_rows(vectors: np.ndarray) -> np.ndarray:
    """Nudge exactly-zero rows so cosine distance stays defined downstream."""
    zero = ~np.any(vectors != 0.0, axis=1)
    if np.any(zero):
        vectors = vectors.copy()
        vectors[zero, 0] = 1e-12
    return vectors


def embed(g: Graph, spec: EmbedSpec, seed: int) -> Embedding:
    """Train an embedding of ``g`` with the engine named in ``spec``."""
    from . import hope, line, node2vec

    if g.n_nodes == 0:
        raise ValueError("cannot embed an empty graph")
    if spec.algorithm == "hope":
        return hope.train_hope(g, spec.dim, spec.beta, seed=seed)
    if spec.algorithm == "line":
        return line.train_line(g, spec, seed)
    if spec.algorithm == "node2vec":
        return node2vec.train_node2vec(g, spec, seed)
    raise ValueError(f"unknown embedding algorithm {spec.algorithm!r}")


def save_embedding(e: Embedding, sink: str | Path | IO[str]) -> None:
    """Text format: header "n d", then "node_id x_1 ... x_d" rows, ids ascending.

    Floats are written with shortest round-trip precision, so save/load is
    exact.
    """
    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8") as fh:
            save_embedding(e, fh)
        return
    sink.write(f"{e.n_nodes} {e.dim}\n")
    for node, row in zip(e.node_order, e.vectors):
        sink.write(str(int(node)) + " " + " ".join(repr(float(x)) for x in row) + "\n")


def load_embedding(source: str | Path | IO[str]) -> Embedding:
    """Parse the text format of :func:`save_embedding`.

    Rows may arrive in any id order; they are re-sorted into ascending order.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_embedding(fh)
    lines = [ln.strip() for ln in source if ln.strip()]
    if not lines:
        raise ValueError("empty embedding file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"bad header {lines[0]!r}, expected 'n d'")
    n, d = int(header[0]), int(header[1])
    if len(lines) - 1 != n:
        raise ValueError(f"header says {n} rows, file has {len(lines) - 1}")
    ids = np.empty(n, dtype=np.int64)
    vectors = np.empty((n, d), dtype=np.float64)
    for i, ln in enumerate(lines[1:]):
        tokens = ln.split()
        if len(tokens) != d + 1:
            raise ValueError(f"row {i + 1}: expected {d + 1} tokens, got {len(tokens)}")
        ids[i] = int(tokens[0])
        vectors[i] = [float(t) for t in tokens[1:]]
    order = np.argsort(ids, kind="stable")
    ids = ids[order]
    if np.any(np.diff(ids) == 0):
        raise ValueError("duplicate node ids in embedding file")
    return Embedding(ids, vectors[order])

"""Random-walk embedding: biased second-order walks fed to skip-gram.

Walk transitions are reweighted by 1/p toward the previous node and 1/q
toward nodes not adjacent to it (p = q = 1 collapses to uniform first-order
walks).  The walk corpus is trained with skip-gram negative sampling;
negatives follow the corpus-frequency^0.75 noise distribution.  Output
vectors are the input-side (target) matrix, unnormalized.
"""

from __future__ import annotations

import numpy as np

from ..graph import Graph
from ..seeds import derive_seed
from . import EmbedSpec, Embedding, guard_zero_rows
from ._kernels import build_alias_table, generate_walks, train_skipgram

_NOISE_POWER = 0.75


def walk_corpus(g: Graph, spec: EmbedSpec, seed: int) -> np.ndarray:
    """Walk matrix over positional node indices, -1 padded.

    ``walks_per_node`` passes are made over the node set, each in a fresh
    seeded shuffle.  Isolated nodes produce length-1 walks (the node alone),
    so every node appears in the corpus.
    """
    n = g.n_nodes
    indptr, indices = g.csr
    rng = np.random.default_rng(derive_seed(seed, "walk-order"))
    starts = np.concatenate([rng.permutation(n) for _ in range(spec.walks_per_node)])
    max_degree = int(g.degrees.max()) if n else 0
    return generate_walks(indptr, indices, starts.astype(np.int64),
                          spec.walk_length, float(spec.p), float(spec.q),
                          max(max_degree, 1), derive_seed(seed, "walk-steps"))


def train_node2vec(g: Graph, spec: EmbedSpec, seed: int) -> Embedding:
    """Deterministic in (g, spec, seed)."""
    n = g.n_nodes
    if n == 0:
        raise ValueError("cannot embed an empty graph")
    walks = walk_corpus(g, spec, seed)
    counts = np.bincount(walks[walks >= 0], minlength=n).astype(np.float64)
    noise_prob, noise_alias = build_alias_table(counts ** _NOISE_POWER)
    rng = np.random.default_rng(derive_seed(seed, "n2v-init"))
    tvecs = rng.uniform(-0.5 / spec.dim, 0.5 / spec.dim, size=(n, spec.dim))
    cvecs = np.zeros((n, spec.dim))
    total_centers = int((walks >= 0).sum()) * spec.epochs
    train_skipgram(walks, tvecs, cvecs, noise_prob, noise_alias, spec.window,
                   spec.negatives, spec.epochs, spec.learning_rate,
                   max(total_centers, 1), derive_seed(seed, "n2v-train"))
    return Embedding(g.node_order, guard_zero_rows(tvecs), "node2vec", seed)

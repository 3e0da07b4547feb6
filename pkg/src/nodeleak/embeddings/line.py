"""Edge-sampling embedding trained on first- and second-order proximity.

Two objectives are trained independently at dim/2 each: the first-order one
ties both vector sets (neighbors should point the same way), the
second-order one learns separate context vectors (neighbors should share
contexts).  Both run SGNS over uniformly sampled directed edges with
negatives drawn from the degree^0.75 noise distribution.  Each half is
L2-normalized per node before concatenation.
"""

from __future__ import annotations

import numpy as np

from ..graph import Graph
from ..seeds import derive_seed
from . import EmbedSpec, Embedding, guard_zero_rows
from ._kernels import build_alias_table, train_edge_sampling

_NOISE_POWER = 0.75


def _directed_edges(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    index = {v: i for i, v in enumerate(g.nodes)}
    m = g.n_edges
    src = np.empty(2 * m, dtype=np.int64)
    dst = np.empty(2 * m, dtype=np.int64)
    pos = 0
    for u, v in g.edges():
        iu, iv = index[u], index[v]
        src[pos], dst[pos] = iu, iv
        src[pos + 1], dst[pos + 1] = iv, iu
        pos += 2
    return src, dst


def _normalize_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    norms[norms == 0.0] = 1.0
    return vectors / norms[:, None]


def train_line(g: Graph, spec: EmbedSpec, seed: int) -> Embedding:
    """Train both objectives and concatenate the normalized halves.

    Deterministic in (g, spec, seed).  Nodes that were isolated all along
    keep their (normalized) random initialization; they are simply never
    sampled.
    """
    if g.n_edges == 0:
        raise ValueError("line embedding needs at least one edge")
    n = g.n_nodes
    half = spec.dim // 2
    src, dst = _directed_edges(g)
    noise_prob, noise_alias = build_alias_table(
        g.degrees.astype(np.float64) ** _NOISE_POWER)
    n_samples = spec.samples_per_edge * g.n_edges
    halves = []
    for order_tag in ("first", "second"):
        rng = np.random.default_rng(derive_seed(seed, "line-init", order_tag))
        tvecs = rng.uniform(-0.5 / half, 0.5 / half, size=(n, half))
        if order_tag == "first":
            cvecs = tvecs  # tied weights
        else:
            cvecs = np.zeros((n, half))
        train_edge_sampling(src, dst, tvecs, cvecs, noise_prob, noise_alias,
                            n_samples, spec.negatives, spec.learning_rate,
                            derive_seed(seed, "line-train", order_tag))
        halves.append(_normalize_rows(tvecs))
    vectors = np.concatenate(halves, axis=1)
    return Embedding(g.node_order, guard_zero_rows(vectors), "line", seed)

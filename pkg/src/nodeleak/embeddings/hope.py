"""Katz-proximity embedding via truncated spectral factorization.

The proximity matrix S = (I - bA)^-1 bA is an analytic function of the
symmetric adjacency matrix A, so its truncated SVD comes straight from the
eigendecomposition of A: if A = Q diag(l) Q^T then S = Q diag(f(l)) Q^T with
f(l) = b*l / (1 - b*l).  Keeping the dim/2 largest |f(l)| gives the optimal
rank-(dim/2) factorization S ~ U S W^T without ever inverting S explicitly.
Cost is one dense eigendecomposition, O(n^3); fine for a few thousand nodes.

Training is deterministic: the seed is recorded in the result but unused.
"""

from __future__ import annotations

import numpy as np

from ..graph import Graph
from . import Embedding, guard_zero_rows

_POWER_ITERATIONS = 200
_POWER_TOL = 1e-12


def spectral_radius(a: np.ndarray) -> float:
    """Largest adjacency eigenvalue, estimated by power iteration.

    The all-ones start vector has positive overlap with the Perron vector of
    any non-negative matrix, so the iteration converges to the spectral
    radius; zero matrices return 0.
    """
    n = a.shape[0]
    x = np.full(n, 1.0 / np.sqrt(n))
    estimate = 0.0
    for _ in range(_POWER_ITERATIONS):
        y = a @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        x = y / norm
        if abs(norm - estimate) <= _POWER_TOL * max(norm, 1.0):
            return norm
        estimate = norm
    return estimate


def katz_proximity(g: Graph, beta: float) -> np.ndarray:
    """Dense Katz matrix S = (I - bA)^-1 bA over the graph's node order."""
    a = g.adjacency_matrix()
    n = a.shape[0]
    return np.linalg.solve(np.eye(n) - beta * a, beta * a)


def train_hope(g: Graph, dim: int, beta: float | None = None, *, seed: int = 0) -> Embedding:
    """Embed each node as [U*sqrt(S) | W*sqrt(S)] from the rank-(dim/2)
    factorization of the Katz proximity matrix.

    ``beta`` defaults to half the reciprocal spectral radius; values at or
    beyond the reciprocal spectral radius make the Katz series diverge.
    The sign of each factor column is fixed by making its largest-magnitude
    entry positive, so results are reproducible across runs.
    """
    n = g.n_nodes
    if n == 0:
        raise ValueError("cannot embed an empty graph")
    if dim < 2 or dim % 2 != 0:
        raise ValueError(f"dim must be a positive even integer, got {dim}")
    k = dim // 2
    if k > n:
        raise ValueError(f"dim/2 = {k} exceeds node count {n}")
    a = g.adjacency_matrix()
    rho = spectral_radius(a)
    if rho == 0.0:
        raise ValueError("rank-deficient proximity: graph has no edges")
    if beta is None:
        beta = 0.5 / rho
    if beta >= 1.0 / rho:
        raise ValueError(f"Katz series diverges: beta={beta} >= 1/spectral radius"
                         f" = {1.0 / rho}")
    lam, vecs = np.linalg.eigh(a)
    scaled = beta * lam
    if np.max(scaled) >= 1.0:
        # power iteration under-estimated the radius
        raise ValueError(f"Katz series diverges: beta={beta} >= "
                         f"1/spectral radius = {1.0 / np.max(lam)}")
    s = scaled / (1.0 - scaled)
    order = np.argsort(-np.abs(s), kind="stable")[:k]
    sigma = np.abs(s[order])
    if sigma[0] <= 1e-12:
        raise ValueError("rank-deficient proximity: all singular values vanish")
    u = vecs[:, order].copy()
    for c in range(k):
        j = int(np.argmax(np.abs(u[:, c])))
        if u[j, c] < 0:
            u[:, c] = -u[:, c]
    signs = np.where(s[order] < 0, -1.0, 1.0)
    w = u * signs
    root = np.sqrt(sigma)
    vectors = np.concatenate([u * root, w * root], axis=1)
    return Embedding(g.node_order, guard_zero_rows(vectors), "hope", seed)


def singular_values(g: Graph, beta: float) -> np.ndarray:
    """All Katz singular values in descending order (for error analysis)."""
    lam = np.linalg.eigvalsh(g.adjacency_matrix())
    scaled = beta * lam
    if np.max(scaled) >= 1.0:
        raise ValueError("Katz series diverges")
    return np.sort(np.abs(scaled / (1.0 - scaled)))[::-1]

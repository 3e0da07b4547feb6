import numpy as np
import pytest

from nodeleak.embeddings import EmbedSpec, embed
from nodeleak.embeddings.hope import (katz_proximity, singular_values,
                                      spectral_radius, train_hope)
from nodeleak.graph import Graph, generate_barabasi
from nodeleak.matrices import cosine_distance_matrix

from conftest import complete_graph, path_graph


def katz_series_oracle(a: np.ndarray, beta: float, terms: int = 400) -> np.ndarray:
    """Independent oracle: truncated series sum b*A + b^2*A^2 + ..."""
    s = np.zeros_like(a)
    term = beta * a
    for _ in range(terms):
        s += term
        term = beta * (term @ a)
    return s


def reconstruct(e) -> np.ndarray:
    half = e.dim // 2
    return e.vectors[:, :half] @ e.vectors[:, half:].T


class TestKatzProximity:
    def test_path_graph_matches_series_oracle(self):
        g = path_graph(3)
        s = katz_proximity(g, 0.1)
        oracle = katz_series_oracle(g.adjacency_matrix(), 0.1)
        assert np.allclose(s, oracle, atol=1e-12)
        # one hop dominates two hops, both positive
        assert s[0][1] > s[0][2] > 0

    def test_random_graphs_match_series_oracle(self, rng):
        for trial in range(25):
            n = int(rng.integers(2, 11))
            density = rng.uniform(0.2, 0.9)
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)
                     if rng.random() < density]
            if not edges:
                continue
            g = Graph.from_edges(edges, nodes=range(n))
            a = g.adjacency_matrix()
            rho = max(spectral_radius(a), 1e-9)
            beta = 0.4 / rho
            assert np.allclose(katz_proximity(g, beta),
                               katz_series_oracle(a, beta), atol=1e-9)


class TestSpectralRadius:
    def test_complete_graph_exact(self):
        # K_n adjacency has top eigenvalue n-1
        assert spectral_radius(complete_graph(6).adjacency_matrix()) == pytest.approx(5.0, abs=1e-9)

    def test_zero_matrix(self):
        assert spectral_radius(np.zeros((4, 4))) == 0.0


class TestTrainHope:
    def test_factorization_reconstructs_katz(self):
        g = generate_barabasi(40, 3, seed=2)
        # full rank: reconstruction must be exact
        e = train_hope(g, dim=2 * g.n_nodes)
        s = katz_proximity(g, 0.5 / spectral_radius(g.adjacency_matrix()))
        assert np.allclose(reconstruct(e), s, atol=1e-9)

    def test_truncation_error_bounded_by_tail(self):
        g = generate_barabasi(40, 3, seed=7)
        beta = 0.5 / spectral_radius(g.adjacency_matrix())
        s = katz_proximity(g, beta)
        # oracle: optimal error from the full spectrum
        all_sigma = np.sort(np.abs(np.linalg.svd(s, compute_uv=False)))[::-1]
        for dim in (8, 16, 32):
            e = train_hope(g, dim=dim, beta=beta)
            err = np.linalg.norm(reconstruct(e) - s)
            tail = np.sqrt((all_sigma[dim // 2:] ** 2).sum())
            assert err <= tail + 1e-9

    def test_reconstruction_error_non_increasing_in_dim(self):
        g = generate_barabasi(30, 2, seed=5)
        s = katz_proximity(g, 0.5 / spectral_radius(g.adjacency_matrix()))
        errors = [np.linalg.norm(reconstruct(train_hope(g, dim=d)) - s)
                  for d in (4, 8, 16, 24)]
        assert all(a >= b - 1e-12 for a, b in zip(errors, errors[1:]))

    def test_deterministic_across_runs_and_seeds(self):
        g = generate_barabasi(60, 3, seed=1)
        a = train_hope(g, dim=16, seed=1)
        b = train_hope(g, dim=16, seed=999)
        assert np.max(np.abs(a.vectors - b.vectors)) <= 1e-9
        da = cosine_distance_matrix(a)
        db = cosine_distance_matrix(b)
        assert np.max(np.abs(da.values - db.values)) <= 1e-9

    def test_sign_convention(self):
        g = generate_barabasi(25, 2, seed=3)
        e = train_hope(g, dim=8)
        half = 4
        u = e.vectors[:, :half]
        for c in range(half):
            assert u[np.argmax(np.abs(u[:, c])), c] > 0

    def test_diverging_beta_rejected(self):
        g = complete_graph(5)
        with pytest.raises(ValueError, match="diverges"):
            train_hope(g, dim=4, beta=0.3)  # 1/rho = 0.25

    def test_zero_edges_rank_deficient(self):
        g = Graph.from_edges([], nodes=range(6))
        with pytest.raises(ValueError, match="rank-deficient"):
            train_hope(g, dim=4)

    def test_dim_too_large(self):
        with pytest.raises(ValueError, match="exceeds"):
            train_hope(path_graph(3), dim=8)

    def test_every_node_covered_and_rows_nonzero(self):
        g = Graph.from_edges([(0, 1), (1, 2)], nodes=[7])  # isolated node 7
        e = train_hope(g, dim=4)
        assert list(e.node_order) == [0, 1, 2, 7]
        assert np.all(np.linalg.norm(e.vectors, axis=1) > 0)

    def test_through_dispatch(self):
        g = generate_barabasi(30, 2, seed=4)
        e = embed(g, EmbedSpec("hope", dim=8), seed=5)
        assert e.vectors.shape == (30, 8)
        assert e.algorithm == "hope"

    def test_singular_values_sorted(self):
        g = generate_barabasi(20, 2, seed=6)
        sv = singular_values(g, 0.5 / spectral_radius(g.adjacency_matrix()))
        assert np.all(np.diff(sv) <= 1e-12)

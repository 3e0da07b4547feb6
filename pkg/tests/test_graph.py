import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nodeleak.graph import (Graph, connected_components, generate_barabasi,
                            induced_subgraph, is_connected,
                            largest_connected_component, load_edge_list,
                            load_edge_list_stats, remove_node, save_edge_list,
                            snowball_sample, stratified_degree_sample)

from conftest import complete_graph, path_graph, star_graph


def small_graphs():
    edges = st.sets(
        st.tuples(st.integers(0, 9), st.integers(0, 9)).filter(lambda e: e[0] != e[1]),
        min_size=1, max_size=20)
    return edges.map(lambda es: Graph.from_edges(es))


class TestGraphInvariants:
    @given(small_graphs())
    def test_symmetry_and_no_self_loops(self, g):
        for u in g.nodes:
            assert u not in g.neighbors(u)
            for v in g.neighbors(u):
                assert u in g.neighbors(v)
                assert v in g.nodes

    @given(small_graphs())
    def test_remove_node_counts(self, g):
        v = g.nodes[0]
        reduced = remove_node(g, v)
        assert reduced.n_nodes == g.n_nodes - 1
        assert reduced.n_edges == g.n_edges - g.degree(v)
        assert v not in reduced
        # input untouched
        assert v in g

    def test_from_edges_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph.from_edges([(1, 1)])

    def test_neighbors_sorted(self):
        g = Graph.from_edges([(5, 1), (5, 9), (5, 3)])
        assert g.neighbors(5) == (1, 3, 9)


class TestEdgeListIO:
    def test_two_edge_path(self):
        g = load_edge_list(io.StringIO("0 1\n1 2"))
        assert g.n_nodes == 3 and g.n_edges == 2

    def test_duplicates_and_self_loops_dropped_with_counts(self):
        g, stats = load_edge_list_stats(io.StringIO("0 1\n1 0\n1 1"))
        assert g.n_nodes == 2 and g.n_edges == 1
        assert stats.dropped == 2
        assert stats.dropped_duplicates == 1 and stats.dropped_self_loops == 1

    def test_comments_ignored(self):
        g = load_edge_list(io.StringIO("# header\n% other\n0 1\n\n1 2\n"))
        assert g.n_edges == 2

    def test_malformed_token_names_line(self):
        with pytest.raises(ValueError, match="line 2"):
            load_edge_list(io.StringIO("0 1\n1 x"))
        with pytest.raises(ValueError, match="line 1"):
            load_edge_list(io.StringIO("0 1 2"))

    def test_empty_input_errors(self):
        with pytest.raises(ValueError, match="empty"):
            load_edge_list(io.StringIO("# nothing\n"))

    def test_sorted_output(self):
        g = Graph.from_edges([(3, 2), (0, 9), (2, 1)])
        buf = io.StringIO()
        save_edge_list(g, buf)
        assert buf.getvalue() == "0 9\n1 2\n2 3\n"

    @given(small_graphs().filter(lambda g: all(g.degree(v) > 0 for v in g.nodes)))
    def test_round_trip_identity(self, g):
        buf = io.StringIO()
        save_edge_list(g, buf)
        buf.seek(0)
        assert load_edge_list(buf) == g


class TestBarabasi:
    def test_seed_clique_plus_one(self):
        g = generate_barabasi(6, 5, seed=0)
        assert g.n_edges == math.comb(5, 2) + 5 == 15

    def test_edge_count_formula(self):
        # every new node adds exactly m edges on top of the seed clique
        g = generate_barabasi(1000, 5, seed=31)
        assert g.n_edges == math.comb(5, 2) + 995 * 5 == 4985
        assert g.n_nodes == 1000

    def test_deterministic(self):
        a = generate_barabasi(300, 3, seed=9)
        b = generate_barabasi(300, 3, seed=9)
        assert a == b
        assert a != generate_barabasi(300, 3, seed=10)

    def test_connected(self):
        assert is_connected(generate_barabasi(200, 2, seed=4))

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            generate_barabasi(5, 5, seed=0)
        with pytest.raises(ValueError):
            generate_barabasi(5, 0, seed=0)


class TestSnowball:
    def test_full_sample_is_identity(self):
        g = generate_barabasi(60, 3, seed=2)
        assert snowball_sample(g, 60, seed=5) == g

    def test_star_from_center(self):
        g = star_graph(6)
        # whichever start, a 3-node sample of a star stays connected
        s = snowball_sample(g, 3, seed=1)
        assert s.n_nodes == 3 and is_connected(s)

    def test_connected_result(self):
        g = generate_barabasi(500, 3, seed=8)
        s = snowball_sample(g, 120, seed=3)
        assert s.n_nodes == 120 and is_connected(s)

    def test_deterministic(self):
        g = generate_barabasi(200, 3, seed=8)
        assert snowball_sample(g, 50, seed=4) == snowball_sample(g, 50, seed=4)

    def test_component_too_small_names_achieved_size(self):
        g = Graph.from_edges([(0, 1), (2, 3)])  # two components of 2
        with pytest.raises(ValueError, match="2 nodes"):
            snowball_sample(g, 4, seed=0)


class TestRemoveAndComponents:
    def test_triangle(self):
        g = complete_graph(3)
        r = remove_node(g, 0)
        assert r.n_nodes == 2 and r.n_edges == 1

    def test_star_center_removal_isolates(self):
        g = star_graph(5)
        r = remove_node(g, 0)
        assert r.n_nodes == 5 and r.n_edges == 0

    def test_path_middle_disconnects(self):
        r = remove_node(path_graph(3), 1)
        assert r.n_nodes == 2 and r.n_edges == 0
        assert not is_connected(r)

    def test_missing_node_errors(self):
        with pytest.raises(ValueError):
            remove_node(path_graph(3), 77)

    def test_lcc_identity_when_connected(self):
        g = generate_barabasi(50, 2, seed=0)
        assert largest_connected_component(g) == g

    def test_lcc_tie_breaks_by_smallest_id(self):
        # two triangles + isolated node; triangle containing node 0 wins
        g = Graph.from_edges([(4, 5), (5, 6), (6, 4), (0, 1), (1, 2), (2, 0)],
                             nodes=[9])
        lcc = largest_connected_component(g)
        assert lcc.nodes == (0, 1, 2)

    def test_empty_graph_errors(self):
        with pytest.raises(ValueError):
            largest_connected_component(Graph.from_edges([]))

    def test_components_sorted_largest_first(self):
        g = Graph.from_edges([(0, 1), (1, 2), (5, 6)])
        comps = connected_components(g)
        assert comps == [[0, 1, 2], [5, 6]]

    def test_induced_subgraph_missing_node(self):
        with pytest.raises(ValueError):
            induced_subgraph(path_graph(3), [0, 42])


class TestStratifiedSample:
    def test_fifteen_distinct_targets(self):
        g = generate_barabasi(1000, 5, seed=1)
        s = stratified_degree_sample(g, 5, seed=2)
        all_nodes = s.low + s.medium + s.high
        assert len(all_nodes) == 15
        assert len(set(all_nodes)) == 15

    def test_path_low_bucket_has_degree_one(self):
        g = path_graph(30)
        s = stratified_degree_sample(g, 1, seed=0)
        assert g.degree(s.low[0]) == 1

    def test_buckets_ordered_by_degree(self):
        g = generate_barabasi(500, 4, seed=3)
        s = stratified_degree_sample(g, 5, seed=9)
        assert max(g.degree(v) for v in s.low) <= min(g.degree(v) for v in s.medium) \
            or np.mean([g.degree(v) for v in s.low]) < np.mean([g.degree(v) for v in s.medium])
        assert np.mean([g.degree(v) for v in s.medium]) < np.mean([g.degree(v) for v in s.high])

    def test_deterministic(self):
        g = generate_barabasi(400, 3, seed=5)
        assert stratified_degree_sample(g, 5, seed=7) == stratified_degree_sample(g, 5, seed=7)

    def test_bucket_samples_stable_under_bucket_selection(self):
        # medium/high picks don't depend on whether low is also sampled
        g = generate_barabasi(400, 3, seed=5)
        a = stratified_degree_sample(g, 3, seed=7)
        b = stratified_degree_sample(g, 3, seed=7)
        assert a.medium == b.medium and a.high == b.high

    def test_insufficient_nodes(self):
        with pytest.raises(ValueError):
            stratified_degree_sample(path_graph(5), 2, seed=0)

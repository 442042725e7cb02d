import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import floyd_warshall_hops, king_move_pairs
from panda.grid import GridWorld, Partition, block_partition
from panda.policy import (
    PolicyGraph,
    all_pairs_hops,
    build_complete_policy,
    build_contact_policy,
    build_grid_policy,
    build_partition_policy,
    graph_distance,
    isolated_policy,
    k_neighbors,
    random_policy,
)

INF = math.inf


@st.composite
def policy_graphs(draw, max_nodes=25):
    n = draw(st.integers(min_value=1, max_value=max_nodes))
    nodes = list(range(n))
    pairs = [(a, b) for a in nodes for b in nodes[a + 1 :]]
    if pairs:
        edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    else:
        edges = []
    return PolicyGraph.build(nodes, edges)


class TestGridWorld:
    def test_row_col_bijection(self):
        grid = GridWorld(4, 3)
        seen = set()
        for cell in grid.cells():
            row, col = grid.row_col(cell)
            assert grid.cell_at(row, col) == cell
            seen.add((row, col))
        assert len(seen) == 12

    def test_euclid_uses_cell_size(self):
        grid = GridWorld(3, 3, cell_size=250.0)
        assert grid.euclid(0, 1) == pytest.approx(250.0)
        assert grid.euclid(0, 4) == pytest.approx(250.0 * math.sqrt(2))
        assert grid.euclid(2, 2) == 0.0

    @pytest.mark.parametrize("w,h,cs", [(0, 3, 1.0), (3, 0, 1.0), (3, 3, 0.0), (3, 3, -1.0)])
    def test_invalid_construction(self, w, h, cs):
        with pytest.raises(ValueError):
            GridWorld(w, h, cs)

    def test_cell_out_of_range(self):
        with pytest.raises(ValueError):
            GridWorld(2, 2).row_col(4)


class TestGridPolicy:
    def test_single_cell_has_no_neighbors(self):
        g = build_grid_policy(GridWorld(1, 1))
        assert g.nodes == frozenset({0})
        assert g.edges == frozenset()

    def test_2x2_is_complete(self):
        # Oracle: enumerate king moves directly.
        g = build_grid_policy(GridWorld(2, 2))
        assert g.edges == frozenset(king_move_pairs(2, 2))
        assert len(g.edges) == 6

    def test_3x3_center_has_eight_neighbors(self):
        g = build_grid_policy(GridWorld(3, 3))
        assert g.degree(4) == 8

    def test_border_cells_have_fewer(self):
        g = build_grid_policy(GridWorld(3, 3))
        assert g.degree(0) == 3
        assert g.degree(1) == 5

    @pytest.mark.parametrize("w,h", [(1, 5), (4, 2), (5, 5), (6, 6)])
    def test_matches_king_move_oracle(self, w, h):
        g = build_grid_policy(GridWorld(w, h))
        assert g.edges == frozenset(king_move_pairs(w, h))


class TestCompletePolicy:
    def test_single_node(self):
        g = build_complete_policy([7])
        assert g.edges == frozenset()

    def test_four_nodes_six_edges(self):
        assert len(build_complete_policy([1, 2, 3, 4]).edges) == 6

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            build_complete_policy([])

    def test_k3_all_distances_one(self):
        g = build_complete_policy([0, 1, 2])
        for a in (0, 1, 2):
            for b in (0, 1, 2):
                assert graph_distance(g, a, b) == (0 if a == b else 1)


class TestPartitionPolicy:
    def test_single_area_is_complete(self):
        grid = GridWorld(2, 2)
        g = build_partition_policy(grid, Partition.from_labels(["a"] * 4))
        assert len(g.edges) == 6

    def test_singleton_areas_are_edgeless(self):
        grid = GridWorld(2, 2)
        g = build_partition_policy(grid, Partition.from_labels([0, 1, 2, 3]))
        assert g.edges == frozenset()

    def test_two_areas_edge_count_and_infinite_cross_distance(self):
        grid = GridWorld(5, 1)
        g = build_partition_policy(grid, Partition.from_labels(["a", "a", "a", "b", "b"]))
        assert len(g.edges) == 3 + 1  # C(3,2) + C(2,2)
        assert graph_distance(g, 0, 3) == INF
        assert graph_distance(g, 0, 2) == 1

    def test_partial_partition_rejected(self):
        grid = GridWorld(2, 2)
        with pytest.raises(ValueError):
            build_partition_policy(grid, Partition({0: "a", 1: "a"}))

    def test_block_partition_shapes(self):
        grid = GridWorld(4, 4)
        part = block_partition(grid, 2)
        assert len(part.areas()) == 4
        assert part.cells_in(part.area_of[0]) == [0, 1, 4, 5]


class TestContactPolicy:
    def test_empty_infected_is_identity(self):
        base = build_grid_policy(GridWorld(3, 3))
        assert build_contact_policy(base, []) == base

    def test_k3_with_one_infected(self):
        base = build_complete_policy([0, 1, 2])
        g = build_contact_policy(base, [2])
        assert g.edges == frozenset({(0, 1)})
        assert g.degree(2) == 0

    def test_all_infected_is_edgeless(self):
        base = build_complete_policy([0, 1, 2])
        assert build_contact_policy(base, [0, 1, 2]).edges == frozenset()

    def test_unknown_infected_rejected(self):
        base = build_complete_policy([0, 1])
        with pytest.raises(ValueError):
            build_contact_policy(base, [9])

    def test_non_infected_subgraph_unchanged(self):
        base = build_grid_policy(GridWorld(3, 3))
        infected = {4, 8}
        g = build_contact_policy(base, infected)
        kept = {(a, b) for a, b in base.edges if a not in infected and b not in infected}
        assert {(a, b) for a, b in g.edges} == kept


class TestRandomPolicy:
    def test_prob_zero_edgeless(self):
        assert random_policy(range(10), 0.0, seed=1).edges == frozenset()

    def test_prob_one_complete(self):
        assert len(random_policy(range(10), 1.0, seed=1).edges) == 45

    def test_reproducible(self):
        a = random_policy(range(10), 0.5, seed=42)
        b = random_policy(range(10), 0.5, seed=42)
        assert a == b

    def test_bad_probability(self):
        with pytest.raises(ValueError):
            random_policy(range(3), 1.5, seed=0)


class TestDistances:
    def test_self_distance_zero(self):
        g = build_grid_policy(GridWorld(3, 3))
        assert graph_distance(g, 5, 5) == 0

    def test_3x3_corner_to_corner(self):
        g = build_grid_policy(GridWorld(3, 3))
        assert graph_distance(g, 0, 8) == 2

    def test_isolated_nodes_infinite(self):
        g = isolated_policy([0, 1])
        assert graph_distance(g, 0, 1) == INF

    def test_unknown_node_rejected(self):
        g = build_complete_policy([0, 1])
        with pytest.raises(ValueError):
            graph_distance(g, 0, 5)

    @given(policy_graphs(max_nodes=12))
    @settings(max_examples=40, deadline=None)
    def test_matches_floyd_warshall(self, g):
        oracle = floyd_warshall_hops(g.nodes, g.edges)
        order = g.sorted_nodes()
        hops = all_pairs_hops(g, order)
        for i, a in enumerate(order):
            for j, b in enumerate(order):
                assert hops[i, j] == oracle[(a, b)]

    @given(policy_graphs(max_nodes=25))
    @settings(max_examples=30, deadline=None)
    def test_metric_properties(self, g):
        order = g.sorted_nodes()
        hops = all_pairs_hops(g, order)
        n = len(order)
        for i in range(n):
            assert hops[i, i] == 0
            for j in range(n):
                assert hops[i, j] == hops[j, i]
                for k in range(n):
                    if math.isfinite(hops[i, k]) and math.isfinite(hops[k, j]):
                        assert hops[i, j] <= hops[i, k] + hops[k, j]


class TestKNeighbors:
    def test_zero_hops_is_self(self):
        g = build_grid_policy(GridWorld(3, 3))
        assert k_neighbors(g, 4, 0) == frozenset({4})

    def test_center_one_hop_covers_3x3(self):
        g = build_grid_policy(GridWorld(3, 3))
        assert k_neighbors(g, 4, 1) == frozenset(range(9))

    def test_isolated_component_is_self(self):
        g = isolated_policy([0, 1])
        assert k_neighbors(g, 0, INF) == frozenset({0})

    def test_unknown_node_rejected(self):
        with pytest.raises(ValueError):
            k_neighbors(build_complete_policy([0]), 3, 1)

    @given(policy_graphs(max_nodes=15), st.integers(min_value=0, max_value=6))
    @settings(max_examples=40, deadline=None)
    def test_monotone_and_component_limit(self, g, k):
        s = g.sorted_nodes()[0]
        assert k_neighbors(g, s, k) <= k_neighbors(g, s, k + 1)
        union = frozenset()
        for kk in range(len(g.nodes) + 1):
            union |= k_neighbors(g, s, kk)
        assert union == k_neighbors(g, s, INF)


class TestGridDistanceFacts:
    @pytest.mark.parametrize("w,h", [(2, 2), (3, 4), (5, 5), (6, 6)])
    def test_chebyshev_on_full_grid(self, w, h):
        grid = GridWorld(w, h)
        g = build_grid_policy(grid)
        order = g.sorted_nodes()
        hops = all_pairs_hops(g, order)
        for i, a in enumerate(order):
            ra, ca = grid.row_col(a)
            for j, b in enumerate(order):
                rb, cb = grid.row_col(b)
                assert hops[i, j] == max(abs(ra - rb), abs(ca - cb))

    @pytest.mark.parametrize("w,h", [(3, 3), (5, 4), (6, 6)])
    def test_hops_bounded_by_euclidean(self, w, h):
        grid = GridWorld(w, h, cell_size=77.0)
        g = build_grid_policy(grid)
        for a in grid.cells():
            for b in grid.cells():
                assert graph_distance(g, a, b) <= grid.euclid(a, b) / grid.cell_size + 1e-12


class TestSerialization:
    def test_round_trip_bit_exact(self):
        g = build_grid_policy(GridWorld(3, 2))
        doc = g.to_json()
        assert PolicyGraph.from_json(doc) == g
        assert PolicyGraph.from_json(doc).to_json() == doc

    def test_edges_normalized_and_sorted(self):
        g = PolicyGraph.build([3, 1, 2], [(3, 1), (2, 3)])
        assert g.to_dict() == {"nodes": [1, 2, 3], "edges": [[1, 3], [2, 3]]}

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            PolicyGraph.build([0, 1], [(0, 0)])

    def test_dangling_edge_rejected(self):
        with pytest.raises(ValueError):
            PolicyGraph.build([0, 1], [(0, 2)])

    def test_missing_keys_rejected(self):
        with pytest.raises(ValueError):
            PolicyGraph.from_dict({"nodes": [1]})

import random

import pytest

from conftest import SIX_NODE_EDGES, SIX_NODE_LAPLACIAN, random_connected_cluster, random_connected_graph
from dofcluster import (
    AssumptionError,
    Cluster,
    GraphError,
    Partition,
    ScenarioError,
    block_view,
    build_graph,
    degree_deficiency_decomposition,
    induced_subgraph,
    is_connected,
    laplacian,
    validate_partition,
)
from dofcluster.graph import parse_edge_list


class TestBuildGraph:
    def test_six_node(self, six_node):
        assert six_node.n == 6
        assert six_node.degree(3) == 4
        assert six_node.neighbors[1] == frozenset({0, 2, 3})

    def test_single_isolated_node(self):
        g = build_graph(1, [])
        assert g.n == 1
        assert g.degree(0) == 0

    def test_duplicate_and_reversed_edges_collapse(self):
        g = build_graph(3, [(0, 1), (0, 1), (1, 0)])
        assert g.edges == frozenset({(0, 1)})

    def test_rejects_out_of_range(self):
        with pytest.raises(GraphError, match="outside"):
            build_graph(3, [(0, 3)])

    def test_rejects_self_loop(self):
        with pytest.raises(GraphError, match="self-loop"):
            build_graph(3, [(1, 1)])

    def test_adjacency_symmetry(self):
        rng = random.Random(7)
        for _ in range(20):
            g = random_connected_graph(rng)
            for i in range(g.n):
                for j in g.neighbors[i]:
                    assert i in g.neighbors[j]
                assert g.degree(i) == len(g.neighbors[i])


class TestLaplacian:
    def test_six_node_matrix(self, six_node):
        assert laplacian(six_node).tolists() == SIX_NODE_LAPLACIAN

    def test_single_node(self):
        assert laplacian(build_graph(1, [])).tolists() == [[0]]

    def test_two_node_path(self):
        assert laplacian(build_graph(2, [(0, 1)])).tolists() == [[1, -1], [-1, 1]]

    def test_row_sums_zero_and_symmetric(self):
        rng = random.Random(11)
        for _ in range(25):
            lap = laplacian(random_connected_graph(rng))
            assert lap.is_symmetric()
            assert all(s == 0 for s in lap.row_sums())


class TestConnectivity:
    def test_six_node_connected(self, six_node):
        assert is_connected(six_node)

    def test_two_disjoint_edges(self):
        assert not is_connected(build_graph(4, [(0, 1), (2, 3)]))

    def test_single_node_connected(self):
        assert is_connected(build_graph(1, []))


class TestInducedSubgraph:
    def test_pair_cluster(self, six_node):
        sub = induced_subgraph(six_node, Cluster([0, 1]))
        assert sub.n == 2
        assert sub.edges == frozenset({(0, 1)})

    def test_full_cluster_is_same_graph(self, six_node):
        sub = induced_subgraph(six_node, Cluster(range(6)))
        assert sub == six_node

    def test_star_cluster(self, six_node):
        sub = induced_subgraph(six_node, Cluster([3, 4, 5]))
        assert sub.edges == frozenset({(0, 1), (0, 2)})
        assert sub.degree(0) == 2

    def test_relabeling_follows_cluster_order(self, six_node):
        sub = induced_subgraph(six_node, Cluster([5, 3, 4]))
        # member 0 is node 5, member 1 is node 3, member 2 is node 4
        assert sub.edges == frozenset({(0, 1), (1, 2)})

    def test_member_out_of_range(self, six_node):
        with pytest.raises(GraphError):
            induced_subgraph(six_node, Cluster([0, 9]))


class TestBlockView:
    def test_pair_cluster(self, six_node):
        view = block_view(six_node, Cluster([0, 1]))
        assert view.diagonal_block.tolists() == [[1, -1], [-1, 3]]
        assert view.bridge_matrix.tolists() == [[0, 0, 0, 0], [-1, -1, 0, 0]]
        assert view.cluster_order == (0, 1)
        assert view.external_order == (2, 3, 4, 5)

    def test_complement_cluster_is_transpose_bridge(self, six_node):
        v1 = block_view(six_node, Cluster([0, 1]))
        v2 = block_view(six_node, Cluster([2, 3, 4, 5]))
        assert v2.diagonal_block.tolists() == [
            [2, -1, 0, 0],
            [-1, 4, -1, -1],
            [0, -1, 1, 0],
            [0, -1, 0, 1],
        ]
        assert v2.bridge_matrix == v1.bridge_matrix.transpose()

    def test_single_node_cluster(self, six_node):
        view = block_view(six_node, Cluster([3]))
        assert view.diagonal_block.tolists() == [[4]]
        assert view.bridge_matrix.tolists() == [[0, -1, -1, -1, -1]]

    def test_full_cluster_rejected(self, six_node):
        with pytest.raises(AssumptionError, match="full node set"):
            block_view(six_node, Cluster(range(6)))

    def test_diagonal_block_dominant_and_symmetric(self):
        rng = random.Random(3)
        for _ in range(20):
            g = random_connected_graph(rng)
            c = random_connected_cluster(rng, g)
            view = block_view(g, c)
            block = view.diagonal_block
            assert block.is_symmetric()
            for r in range(block.rows):
                off = sum(abs(block[r, j]) for j in range(block.cols) if j != r)
                assert block[r, r] >= off

    def test_row_sum_split(self):
        # diagonal entry = intra-cluster degree + bridge degree, per row
        rng = random.Random(5)
        for _ in range(20):
            g = random_connected_graph(rng)
            c = random_connected_cluster(rng, g)
            view = block_view(g, c)
            for r in range(len(c)):
                intra = -sum(view.diagonal_block[r, j] for j in range(len(c)) if j != r)
                bridge = -sum(view.bridge_matrix.row(r))
                assert view.diagonal_block[r, r] == intra + bridge


class TestDegreeDeficiency:
    def test_pair_cluster(self, six_node):
        lap_inner, deficiency = degree_deficiency_decomposition(six_node, Cluster([0, 1]))
        assert lap_inner.tolists() == [[1, -1], [-1, 1]]
        assert deficiency.tolists() == [[0, 0], [0, 2]]

    def test_three_path_drop_leaf(self):
        g = build_graph(3, [(0, 1), (1, 2)])
        lap_inner, deficiency = degree_deficiency_decomposition(g, Cluster([0, 1]))
        assert lap_inner.tolists() == [[1, -1], [-1, 1]]
        assert deficiency.tolists() == [[0, 0], [0, 1]]

    def test_full_cluster_rejected(self):
        g = build_graph(2, [(0, 1)])
        with pytest.raises(AssumptionError):
            degree_deficiency_decomposition(g, Cluster([0, 1]))

    def test_reconstructs_diagonal_block(self):
        rng = random.Random(13)
        for _ in range(25):
            g = random_connected_graph(rng)
            c = random_connected_cluster(rng, g)
            lap_inner, deficiency = degree_deficiency_decomposition(g, c)
            assert all(s == 0 for s in lap_inner.row_sums())
            assert all(deficiency[i, i] >= 0 for i in range(len(c)))
            assert lap_inner + deficiency == block_view(g, c).diagonal_block


class TestValidatePartition:
    def test_canonical_partition_valid(self, six_node):
        p = Partition([Cluster([0, 1]), Cluster([2, 3, 4, 5])])
        assert validate_partition(six_node, p).ok

    def test_singletons_valid(self, six_node):
        p = Partition([Cluster([0]), Cluster([1]), Cluster([2, 3, 4, 5])])
        assert validate_partition(six_node, p).ok

    def test_disconnected_cluster_invalid(self, six_node):
        p = Partition([Cluster([0, 2]), Cluster([1, 3, 4, 5])])
        report = validate_partition(six_node, p)
        assert not report.ok
        assert any("disconnected subgraph" in v for v in report.violations)

    def test_too_few_clusters(self, six_node):
        report = validate_partition(six_node, Partition([Cluster(range(6))]))
        assert any("at least 2" in v for v in report.violations)

    def test_overlap_and_missing(self, six_node):
        p = Partition([Cluster([0, 1]), Cluster([1, 2, 3])])
        report = validate_partition(six_node, p)
        assert any("appears in clusters" in v for v in report.violations)
        assert any("not covered" in v for v in report.violations)

    def test_disconnected_graph_reported(self):
        g = build_graph(4, [(0, 1), (2, 3)])
        p = Partition([Cluster([0, 1]), Cluster([2, 3])])
        report = validate_partition(g, p)
        assert any("graph is disconnected" in v for v in report.violations)


class TestEdgeListFiles:
    ONE_BASED = "# demo\n6\n1 2\n2 3\n2 4\n3 4\n4 6\n4 5\n"

    def test_one_based_labels(self, six_node):
        g, labels = parse_edge_list(self.ONE_BASED)
        assert g == six_node
        assert labels == ["1", "2", "3", "4", "5", "6"]

    def test_zero_based_labels(self, six_node):
        text = "6\n" + "\n".join(f"{i} {j}" for i, j in SIX_NODE_EDGES)
        g, labels = parse_edge_list(text)
        assert g == six_node
        assert labels == ["0", "1", "2", "3", "4", "5"]

    def test_arbitrary_labels(self):
        g, labels = parse_edge_list("3\na b\nb c\n")
        assert labels == ["a", "b", "c"]
        assert g.edges == frozenset({(0, 1), (1, 2)})

    def test_comments_and_blanks(self):
        g, _ = parse_edge_list("# header\n\n2\n0 1  # trailing\n")
        assert g.edges == frozenset({(0, 1)})

    def test_isolated_node_kept(self):
        g, labels = parse_edge_list("3\n0 1\n")
        assert g.n == 3
        assert g.degree(2) == 0
        assert labels == ["0", "1", "2"]

    def test_bad_first_line(self):
        with pytest.raises(ScenarioError, match="node count"):
            parse_edge_list("a b\n")

    def test_bad_edge_line(self):
        with pytest.raises(ScenarioError, match="edge line"):
            parse_edge_list("2\n0 1 2\n")

    def test_empty_file(self):
        with pytest.raises(ScenarioError, match="empty"):
            parse_edge_list("# nothing\n")

    def test_unmappable_labels(self):
        with pytest.raises(ScenarioError, match="cannot map"):
            parse_edge_list("4\na b\n")

    def test_read_graph_from_scenario_file(self, tmp_path, six_node):
        from dofcluster import read_graph_file

        path = tmp_path / "s.json"
        path.write_text(
            '{"graph": {"nodes": ["1","2","3","4","5","6"],'
            ' "edges": [["1","2"],["2","3"],["2","4"],["3","4"],["4","6"],["4","5"]]}}'
        )
        g, labels = read_graph_file(path)
        assert g == six_node
        assert labels == ["1", "2", "3", "4", "5", "6"]

import pytest
from conftest import oracle_neighborhood_edges, random_graph, rng_for

from palettesparse.graphcore import (
    GenerationError,
    Graph,
    GraphError,
    gen_bipartite,
    gen_locally_sparse,
    load_graph,
    local_sparsity,
    max_degree,
    save_graph,
)


def K(n):
    return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def cycle(n):
    return Graph(n, [(i, (i + 1) % n) for i in range(n - 1)] + [(0, n - 1)])


class TestLocalSparsity:
    def test_triangle(self):
        assert local_sparsity(K(3)).k_star == 1

    def test_five_cycle(self):
        assert local_sparsity(cycle(5)).k_star == 0

    def test_k4(self):
        rep = local_sparsity(K(4))
        assert rep.k_star == 3
        assert rep.per_vertex_neighborhood_edges == (3, 3, 3, 3)

    def test_empty(self):
        rep = local_sparsity(Graph(4))
        assert rep.k_star == 0
        assert rep.per_vertex_neighborhood_edges == (0, 0, 0, 0)

    def test_k_star_is_max_of_per_vertex(self):
        rng = rng_for(11)
        for _ in range(20):
            g = random_graph(rng, 12, 0.4)
            rep = local_sparsity(g)
            assert rep.k_star == max(rep.per_vertex_neighborhood_edges)

    def test_agrees_with_pair_enumeration(self):
        rng = rng_for(5)
        for trial in range(60):
            n = int(rng.integers(1, 11))
            g = random_graph(rng, n, float(rng.uniform(0.1, 0.9)))
            got = list(local_sparsity(g).per_vertex_neighborhood_edges)
            assert got == oracle_neighborhood_edges(g)

    def test_bitset_path_agrees_on_large_graph(self):
        # push past the pure-python cutoff
        g = gen_bipartite(440, 140, seed=3)
        assert g.m > 20000
        got = list(local_sparsity(g).per_vertex_neighborhood_edges)
        assert got == oracle_neighborhood_edges(g)

    def test_dense_graph_uses_bitset_path(self):
        rng = rng_for(17)
        g = random_graph(rng, 260, 0.65)
        assert g.m > 20000
        got = list(local_sparsity(g).per_vertex_neighborhood_edges)
        assert got == oracle_neighborhood_edges(g)


class TestMaxDegree:
    def test_examples(self):
        assert max_degree(Graph(5)) == 0
        assert max_degree(Graph(3, [(0, 1), (1, 2)])) == 2
        assert max_degree(K(4)) == 3


class TestGraphValidation:
    def test_self_loop_rejected(self):
        with pytest.raises(GraphError):
            Graph(3, [(1, 1)])

    def test_duplicate_rejected(self):
        with pytest.raises(GraphError):
            Graph(3, [(0, 1), (1, 0)])

    def test_out_of_range_rejected(self):
        with pytest.raises(GraphError):
            Graph(3, [(0, 3)])

    def test_adjacency_sorted_and_symmetric(self):
        rng = rng_for(2)
        for _ in range(10):
            g = random_graph(rng, 15, 0.3)
            for u in range(g.n):
                row = g.adj[u]
                assert list(row) == sorted(row)
                for v in row:
                    assert u in g.adj[v]

    def test_from_adjacency_rejects_asymmetry(self):
        with pytest.raises(GraphError):
            Graph.from_adjacency([(1,), ()])


class TestGenerators:
    def test_triangle_free_instance(self):
        g = gen_locally_sparse(100, 3, 0, seed=7)
        rep = local_sparsity(g)
        assert rep.k_star == 0
        assert rep.max_degree <= 3

    def test_degree_zero_gives_edgeless(self):
        g = gen_locally_sparse(10, 0, 0, seed=1)
        assert g.m == 0

    def test_audit_holds(self):
        g = gen_locally_sparse(50, 8, 2, seed=1)
        rep = local_sparsity(g)
        assert rep.k_star <= 2
        assert rep.max_degree <= 8

    @pytest.mark.parametrize("seed", range(6))
    def test_audit_holds_across_seeds(self, seed):
        g = gen_locally_sparse(40, 6, 1, seed=seed)
        rep = local_sparsity(g)
        assert rep.k_star <= 1
        assert rep.max_degree <= 6

    def test_deterministic(self):
        a = gen_locally_sparse(30, 5, 2, seed=9)
        b = gen_locally_sparse(30, 5, 2, seed=9)
        assert a.adj == b.adj

    def test_infeasible_rejected(self):
        with pytest.raises(GenerationError):
            gen_locally_sparse(5, 5, 0, seed=0)
        with pytest.raises(GenerationError):
            gen_locally_sparse(0, 0, 0, seed=0)

    def test_bipartite(self):
        g = gen_bipartite(200, 12, seed=4)
        rep = local_sparsity(g)
        assert rep.k_star == 0
        assert rep.max_degree <= 12


class TestGraphFile:
    def test_roundtrip(self, tmp_path):
        g = gen_locally_sparse(25, 4, 1, seed=3)
        path = tmp_path / "g.txt"
        save_graph(g, path)
        h = load_graph(path)
        assert h.n == g.n and h.adj == g.adj

    def test_rejects_u_ge_v(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 1\n1 0\n")
        with pytest.raises(GraphError):
            load_graph(path)

    def test_rejects_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 2\n0 1\n")
        with pytest.raises(GraphError):
            load_graph(path)

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3\n")
        with pytest.raises(GraphError):
            load_graph(path)

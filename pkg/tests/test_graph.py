import math

import numpy as np
import pytest

from graphpot import (Exhaustion, GraphFormatError, GraphSizeError,
                      GraphStructureError, Measure, Potential, WeightedGraph,
                      cycle_graph, generate, induced_truncation, kary_tree,
                      lattice, lattice_coordinates, lattice_origin,
                      parse_edge_list, path_graph, validate_graph)
from graphpot.graph import parse_measure, parse_potential

from conftest import random_connected_graph


class TestParsing:
    def test_single_edge(self):
        g = parse_edge_list("0\t1\t1.0\n")
        assert g.num_vertices == 2
        assert g.degree(0) == g.degree(1) == 1.0

    def test_weighted_triangle_degrees(self):
        g = parse_edge_list("0\t1\t1\n1\t2\t1\n0\t2\t2\n")
        assert g.degree(1) == 2.0
        assert g.degree(0) == g.degree(2) == 3.0

    def test_disconnected_rejected(self):
        with pytest.raises(GraphStructureError, match="disconnected"):
            parse_edge_list("0\t1\t1\n2\t3\t1\n")

    def test_self_loop_rejected(self):
        with pytest.raises(GraphStructureError, match="self-loop"):
            parse_edge_list("1\t1\t1\n")

    def test_non_positive_weight_rejected(self):
        with pytest.raises(GraphStructureError, match="non-positive"):
            parse_edge_list("0\t1\t0.0\n")
        with pytest.raises(GraphStructureError, match="non-positive"):
            parse_edge_list("0\t1\t-2\n")

    def test_duplicate_entries_must_agree(self):
        g = parse_edge_list("0\t1\t2.5\n1\t0\t2.5\n")
        assert g.weight(0, 1) == 2.5
        with pytest.raises(GraphStructureError, match="conflicting"):
            parse_edge_list("0\t1\t2.5\n1\t0\t2.0\n")

    def test_comments_and_blanks_ignored(self):
        g = parse_edge_list("# header\n\n0\t1\t1\n")
        assert g.num_edges == 1

    def test_measure_and_potential_files(self):
        m = parse_measure("0\t1.5\n1\t2.0\n")
        assert m.total == 3.5
        with pytest.raises(GraphFormatError):
            parse_measure("0\t0.0\n")
        f = parse_potential("3\t-1.25\n")
        assert f[3] == -1.25
        assert f[99] == 0.0  # unlisted defaults to zero


class TestGenerators:
    def test_lattice_1d_is_path(self):
        g = lattice(1, 3)
        assert g.num_vertices == 7
        assert g.num_edges == 6
        coords = lattice_coordinates(1, 3)
        assert sorted(c[0] for c in coords.values()) == list(range(-3, 4))

    def test_lattice_2d_radius_1(self):
        g = lattice(2, 1)
        assert g.num_vertices == 5
        assert g.num_edges == 4

    def test_lattice_ball_sizes_match_count_formula(self):
        # |B_r| in Z^2 is 2r^2 + 2r + 1
        for r in (1, 2, 4, 8):
            assert lattice(2, r).num_vertices == 2 * r * r + 2 * r + 1

    def test_tree_2_2(self):
        g = kary_tree(2, 2)
        assert g.num_vertices == 7
        assert g.num_edges == 6
        assert g.degree(0) == 2.0

    def test_tree_labelling_is_heap_order(self):
        g = kary_tree(3, 2)
        assert set(g.neighbors(0)) == {1, 2, 3}
        assert set(g.neighbors(1)) == {0, 4, 5, 6}

    def test_path_and_cycle(self):
        assert path_graph(5).num_edges == 4
        assert cycle_graph(5).num_edges == 5
        assert cycle_graph(5).degree(0) == 2.0

    def test_vertex_cap(self):
        with pytest.raises(GraphSizeError):
            lattice(1, 100, vertex_cap=50)
        with pytest.raises(GraphSizeError):
            kary_tree(2, 40)  # 2^41 - 1 blows the default cap

    def test_generate_dispatch(self):
        g, origin = generate("lattice:2", 2)
        assert g.num_vertices == 13
        assert lattice_coordinates(2, 2)[origin] == (0, 0)
        g, root = generate("tree:2", 3)
        assert root == 0
        with pytest.raises(GraphFormatError):
            generate("moebius:2", 3)

    def test_single_vertex_graph_is_valid(self):
        g = path_graph(1)
        assert g.num_vertices == 1
        assert g.max_degree == 0.0


class TestExhaustion:
    def test_path_example(self):
        g = lattice(1, 3)
        coords = lattice_coordinates(1, 3)
        inv = {c[0]: v for v, c in coords.items()}
        ex = Exhaustion.from_balls(g, lattice_origin(1, 3), [1, 2])
        assert ex.sets[0] == frozenset({inv[-1], inv[0], inv[1]})
        assert ex.rings[0] == frozenset({inv[-2], inv[2]})

    def test_triangle_diameter_one(self, unit_triangle):
        ex = Exhaustion.from_balls(unit_triangle, 0, [1])
        assert ex.sets[0] == frozenset({0, 1, 2})
        assert ex.rings[0] == frozenset()

    def test_lattice2_ball_sizes(self):
        g = lattice(2, 8)
        ex = Exhaustion.from_balls(g, lattice_origin(2, 8), [1, 2, 4])
        assert [len(F) for F in ex.sets] == [5, 13, 41]

    def test_radii_must_increase(self):
        g = path_graph(5)
        with pytest.raises(GraphStructureError):
            Exhaustion.from_balls(g, 0, [2, 2])

    def test_missing_seed(self):
        g = path_graph(5)
        with pytest.raises(GraphStructureError):
            Exhaustion.from_balls(g, 17, [1])

    def test_nesting_and_ring_disjointness(self, rng):
        for _ in range(20):
            g = random_connected_graph(rng, n_max=20)
            seed = g.vertices[0]
            ex = Exhaustion.from_balls(g, seed, [1, 2, 3])
            for F, nextF in zip(ex.sets, ex.sets[1:]):
                assert F <= nextF
            for F, R in zip(ex.sets, ex.rings):
                assert not (F & R)

    def test_clamp_to_proper(self):
        g = path_graph(5)
        ex = Exhaustion.from_balls(g, 0, [2, 10, 20], clamp_to_proper=True)
        assert ex.sets[1] == ex.sets[2]
        assert ex.rings[2] != frozenset()


class TestTruncation:
    def test_middle_of_path(self):
        g = lattice(1, 1)  # points -1, 0, 1 with ids 0, 1, 2
        origin = lattice_origin(1, 1)
        sub, ring = induced_truncation(g, {origin})
        assert sub.num_vertices == 3
        assert sub.num_edges == 2
        assert ring == frozenset({0, 2})

    def test_whole_graph_identity(self, unit_triangle):
        sub, ring = induced_truncation(unit_triangle, {0, 1, 2})
        assert ring == frozenset()
        assert list(sub.edges()) == list(unit_triangle.edges())

    def test_tree_levels(self):
        g = kary_tree(2, 3)
        sub, ring = induced_truncation(g, {0, 1, 2})
        assert ring == frozenset({3, 4, 5, 6})

    def test_empty_set_rejected(self, unit_triangle):
        with pytest.raises(GraphStructureError):
            induced_truncation(unit_triangle, set())

    def test_idempotent(self, rng):
        for _ in range(20):
            g = random_connected_graph(rng, n_max=15)
            k = max(1, len(g.vertices) // 2)
            F = set(g.vertices[:k])
            sub1, ring1 = induced_truncation(g, F)
            sub2, ring2 = induced_truncation(sub1, F)
            assert list(sub1.edges()) == list(sub2.edges())
            assert ring1 == ring2

    def test_ring_ring_edges_dropped(self):
        g = cycle_graph(4)
        sub, ring = induced_truncation(g, {0})
        assert ring == frozenset({1, 3})
        assert not sub.has_edge(1, 3)  # both endpoints outside F


class TestValidate:
    def test_weighted_triangle(self, weighted_triangle):
        d = validate_graph(weighted_triangle)
        assert d.connected
        assert d.max_degree == 3.0

    def test_single_edge(self, single_edge):
        assert validate_graph(single_edge).max_degree == 1.0

    def test_star(self, star4):
        d = validate_graph(star4)
        assert d.max_degree == 3.0
        assert star4.degree(1) == 1.0

    def test_symmetry_invariant_random(self, rng):
        for _ in range(10):
            g = random_connected_graph(rng)
            d = validate_graph(g)
            assert d.symmetric and d.zero_diagonal and d.connected


class TestMeasurePotential:
    def test_measure_mass(self):
        m = Measure({0: 1.0, 1: 2.0, 2: 4.0})
        assert m.total == 7.0
        assert m.mass([0, 2]) == 5.0
        assert m.restrict([1]).total == 2.0

    def test_potential_arithmetic(self):
        f = Potential({0: 1.0, 1: 2.0})
        g = Potential({1: 1.0, 2: -1.0})
        assert (f + g)[1] == 3.0
        assert (f - g)[2] == 1.0
        assert (2.0 * f)[0] == 2.0

    def test_support_flag(self):
        Potential({0: 1.0}, support=frozenset({0, 1}))
        with pytest.raises(GraphFormatError):
            Potential({2: 1.0}, support=frozenset({0}))

import math

import numpy as np
import pytest

from graphpot import (EdgeFunction, Measure, MetricError, Potential,
                      WeightedGraph, check_pseudometric, dirichlet_energy,
                      discrete_topology_metric, distance_bound_check,
                      distance_to_set, energy_value, greedy_net_size,
                      intrinsic_report, kary_tree, lattice, lattice_origin,
                      metric_ball, metric_diameter, metric_from_potential,
                      path_metric, path_metric_idempotent,
                      perturb_to_injective)
from graphpot.metrics import ExplicitMetric, PathMetric

from conftest import random_connected_graph, random_potential


def brute_force_distance(graph, w, src, dst):
    """Min over all simple paths of the left-to-right accumulated length."""
    best = math.inf
    if src == dst:
        return 0.0
    stack = [(src, 0.0, {src})]
    while stack:
        v, acc, seen = stack.pop()
        for u in graph.neighbors(v):
            if u in seen:
                continue
            nxt = acc + w.value(v, u)
            if u == dst:
                best = min(best, nxt)
            elif nxt < best:
                stack.append((u, nxt, seen | {u}))
    return best


class TestPseudometricCheck:
    def test_collinear_points(self):
        xs = np.array([0.0, 1.0, 2.5, 4.0])
        M = np.abs(xs[:, None] - xs[None, :])
        ok, triple = check_pseudometric(M)
        assert ok and triple is None

    def test_violated_triangle(self):
        M = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
        ok, triple = check_pseudometric(M)
        assert not ok
        i, k, j = triple
        assert M[i, j] > M[i, k] + M[k, j]

    def test_zero_matrix_is_pseudometric(self):
        ok, _ = check_pseudometric(np.zeros((4, 4)))
        assert ok
        em = ExplicitMetric(range(4), np.zeros((4, 4)))
        assert not em.metric_flag

    def test_asymmetry_detected(self):
        M = np.array([[0.0, 1.0], [2.0, 0.0]])
        ok, _ = check_pseudometric(M)
        assert not ok

    def test_nonzero_diagonal_detected(self):
        M = np.array([[0.5]])
        ok, _ = check_pseudometric(M)
        assert not ok


class TestIntrinsic:
    def test_gradient_metric_zero_slack(self, rng):
        for _ in range(30):
            g = random_connected_graph(rng)
            f = random_potential(rng, g)
            sigma, load = metric_from_potential(g, f)
            rep = intrinsic_report(g, sigma, Measure({v: max(x, 5e-324)
                                                      for v, x in load.items()}))
            assert rep.intrinsic
            # identical accumulation on both sides: slack exactly zero
            assert all(s == 0.0 for v, s in rep.slack.items()
                       if load[v] > 0.0)

    def test_overloaded_edge(self, single_edge):
        sigma = ExplicitMetric([0, 1], np.array([[0.0, 2.0], [2.0, 0.0]]))
        rep = intrinsic_report(single_edge, sigma, Measure.uniform(single_edge))
        assert not rep.intrinsic
        assert rep.load[0] == 2.0

    def test_zero_metric_always_intrinsic(self, unit_triangle):
        sigma = ExplicitMetric([0, 1, 2], np.zeros((3, 3)))
        rep = intrinsic_report(unit_triangle, sigma,
                               Measure.uniform(unit_triangle, 1e-9))
        assert rep.intrinsic

    def test_edge_energy_total_matches_q(self, unit_triangle):
        f = Potential({0: 0.0, 1: 1.0, 2: 2.0})
        sigma, load = metric_from_potential(unit_triangle, f)
        rep = intrinsic_report(unit_triangle, sigma,
                               Measure({v: x + 1.0 for v, x in load.items()}))
        assert rep.edge_energy_total == energy_value(unit_triangle, f) == 6.0


class TestGradientMetric:
    def test_constant_gives_zero(self, unit_triangle):
        sigma, load = metric_from_potential(
            unit_triangle, Potential.constant(unit_triangle, 4.0))
        assert np.all(sigma.matrix == 0.0)
        assert all(x == 0.0 for x in load.values())

    def test_triangle_values(self, unit_triangle):
        f = Potential({0: 0.0, 1: 1.0, 2: 2.0})
        sigma, load = metric_from_potential(unit_triangle, f)
        assert sigma.d(0, 2) == 2.0
        assert math.fsum(load.values()) == 6.0

    def test_one_lipschitz_with_equality(self, rng):
        g = random_connected_graph(rng)
        f = random_potential(rng, g)
        sigma, _ = metric_from_potential(g, f)
        for u in g.vertices:
            for v in g.vertices:
                assert abs(f[u] - f[v]) == sigma.d(u, v)

    def test_passes_pseudometric_check(self, rng):
        for _ in range(20):
            g = random_connected_graph(rng)
            sigma, _ = metric_from_potential(g, random_potential(rng, g))
            ok, triple = check_pseudometric(sigma.matrix)
            assert ok, triple


class TestPathMetric:
    def test_shortcut_beaten_by_path(self):
        g = WeightedGraph([0, 1, 2], {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 1.0})
        w = EdgeFunction({(0, 1): 1.0, (1, 2): 1.0, (0, 2): 3.0})
        pm = path_metric(g, w)
        assert pm.d(0, 2) == 2.0
        assert pm.d(0, 2) == brute_force_distance(g, w, 0, 2)

    def test_identity(self, unit_triangle):
        pm = path_metric(unit_triangle, EdgeFunction.constant(unit_triangle, 1.0))
        assert pm.d(1, 1) == 0.0

    def test_gradient_restriction_recovers_differences(self, unit_triangle):
        f = Potential({0: 0.0, 1: 1.0, 2: 2.0})
        w = EdgeFunction.from_potential_gradient(unit_triangle, f)
        pm = path_metric(unit_triangle, w)
        assert pm.d(0, 2) == 2.0 == abs(f[0] - f[2])

    def test_dominated_by_edge_values(self, rng):
        for _ in range(30):
            g = random_connected_graph(rng, n_max=9)
            w = EdgeFunction({(u, v): float(rng.uniform(0, 3))
                              for u, v, _ in g.edges()})
            pm = path_metric(g, w)
            for u, v, _ in g.edges():
                assert pm.d(u, v) <= w.value(u, v)

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(40):
            g = random_connected_graph(rng, n_max=8)
            w = EdgeFunction({(u, v): float(rng.uniform(0.1, 3))
                              for u, v, _ in g.edges()})
            pm = path_metric(g, w)
            for u in g.vertices:
                for v in g.vertices:
                    assert pm.d(u, v) == brute_force_distance(g, w, u, v)

    def test_zero_weight_edges_connect(self):
        g = WeightedGraph([0, 1, 2], {(0, 1): 1.0, (1, 2): 1.0})
        w = EdgeFunction({(0, 1): 0.0, (1, 2): 2.0})
        pm = path_metric(g, w)
        assert pm.d(0, 1) == 0.0
        assert pm.d(0, 2) == 2.0

    def test_idempotence_small_graphs(self, rng):
        for _ in range(25):
            g = random_connected_graph(rng, n_max=8)
            w = EdgeFunction({(u, v): float(rng.uniform(0.1, 3))
                              for u, v, _ in g.edges()})
            assert path_metric_idempotent(g, w)

    def test_fixed_point_unchanged(self, rng):
        g = random_connected_graph(rng, n_max=8)
        w = EdgeFunction({(u, v): float(rng.uniform(0.5, 2))
                          for u, v, _ in g.edges()})
        d1 = path_metric(g, w).as_matrix()
        restr = EdgeFunction({(u, v): float(d1[g.index_of(u), g.index_of(v)])
                              for u, v, _ in g.edges()})
        d2 = path_metric(g, restr).as_matrix()
        assert np.array_equal(d1, d2)


class TestDiscreteTopologyMetric:
    def test_two_vertex_example(self, single_edge):
        sigma, cert = discrete_topology_metric(single_edge, order=[0, 1])
        # scales match the closed form, modulo the downward nudge that keeps
        # the exact load budget
        assert math.isclose(cert.scale[0], 1.0 / math.sqrt(2.0), rel_tol=1e-15)
        assert cert.scale[1] == 0.5
        assert sigma.d(0, 1) == cert.scale[0]

    def test_total_load_bound_lattice(self):
        g = lattice(2, 8)
        _, cert = discrete_topology_metric(g)
        assert cert.total_load <= 2.0

    def test_total_load_bound_tree(self):
        g = kary_tree(3, 6)
        _, cert = discrete_topology_metric(g)
        assert cert.total_load <= 2.0
        assert cert.min_off_diagonal > 0.0

    def test_ultrametric_inequality(self):
        g = kary_tree(2, 3)
        sigma, _ = discrete_topology_metric(g)
        M = sigma.matrix
        n = len(g.vertices)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    assert M[i, j] <= max(M[i, k], M[k, j]) + 1e-15

    def test_intrinsic_for_own_load_measure(self):
        # the smallest intrinsic measure is the load itself; its total is
        # bounded by the certified total
        g = kary_tree(2, 4)
        sigma, cert = discrete_topology_metric(g)
        rep = intrinsic_report(g, sigma, Measure.uniform(g, 100.0))
        assert rep.intrinsic
        assert rep.edge_energy_total <= cert.total_load <= 2.0

    def test_enumeration_must_cover(self, unit_triangle):
        with pytest.raises(MetricError):
            discrete_topology_metric(unit_triangle, order=[0, 1])


class TestPerturbation:
    def test_zero_function_three_vertices(self):
        g = WeightedGraph([0, 1, 2], {(0, 1): 1.0, (1, 2): 1.0})
        f = Potential({})
        out = perturb_to_injective(g, f, 0.1, rng_seed=7)
        vals = [out[v] for v in g.vertices]
        assert len(set(vals)) == 3
        assert all(abs(x) < 0.1 for x in vals)
        assert energy_value(g, out) < 0.1

    def test_injective_input_still_bounded(self, rng):
        g = random_connected_graph(rng, n_max=6)
        f = Potential({v: float(i) for i, v in enumerate(g.vertices)})
        out = perturb_to_injective(g, f, 0.05, rng_seed=3)
        assert max(abs(out[v] - f[v]) for v in g.vertices) < 0.05

    def test_deterministic_given_seed(self, rng):
        g = random_connected_graph(rng, n_max=10)
        f = random_potential(rng, g)
        a = perturb_to_injective(g, f, 0.01, rng_seed=42)
        b = perturb_to_injective(g, f, 0.01, rng_seed=42)
        assert a.values == b.values

    def test_contracts_on_many_random_cases(self, rng):
        for _ in range(100):
            g = random_connected_graph(rng, n_max=12)
            f = random_potential(rng, g)
            eps = float(rng.uniform(1e-6, 0.5))
            out = perturb_to_injective(g, f, eps, rng_seed=int(rng.integers(1 << 30)))
            vals = [out[v] for v in g.vertices]
            assert len(set(vals)) == len(vals)
            assert max(abs(out[v] - f[v]) for v in g.vertices) < eps
            diff = out - Potential({v: f[v] for v in g.vertices})
            assert energy_value(g, diff) < eps


class TestDistanceToSet:
    def test_whole_set_gives_zero(self, unit_triangle):
        sigma, _ = metric_from_potential(unit_triangle,
                                         Potential({0: 0.0, 1: 1.0, 2: 2.0}))
        sU = distance_to_set(sigma, [0, 1, 2])
        assert all(sU[v] == 0.0 for v in unit_triangle.vertices)

    def test_collinear_euclidean(self):
        xs = np.array([0.0, 1.0, 2.0])
        M = np.abs(xs[:, None] - xs[None, :])
        sigma = ExplicitMetric([0, 1, 2], M)
        sU = distance_to_set(sigma, [0])
        assert [sU[v] for v in (0, 1, 2)] == [0.0, 1.0, 2.0]

    def test_empty_set_rejected(self, unit_triangle):
        sigma, _ = metric_from_potential(unit_triangle, Potential({}))
        with pytest.raises(MetricError):
            distance_to_set(sigma, [])

    def test_one_lipschitz(self, rng):
        for _ in range(20):
            g = random_connected_graph(rng, n_max=10)
            w = EdgeFunction({(u, v): float(rng.uniform(0.1, 2))
                              for u, v, _ in g.edges()})
            pm = path_metric(g, w)
            U = [g.vertices[0], g.vertices[-1]]
            sU = distance_to_set(pm, U)
            for u in g.vertices:
                for v in g.vertices:
                    assert abs(sU[u] - sU[v]) <= pm.d(u, v) + 1e-12

    def test_energy_bound_on_lattice(self):
        g = lattice(2, 6)
        w = EdgeFunction.constant(g, 0.25)
        pm = path_metric(g, w)
        load = dict(zip(g.vertices,
                        (0.5 * g.degree(v) * 0.25 ** 2 for v in g.vertices)))
        m = Measure(load)
        U = g.ball(lattice_origin(2, 6), 3)
        sU, bound = distance_bound_check(g, pm, m, U)
        assert bound.holds
        assert bound.energy <= 2.0 * m.mass(set(g.vertices) - set(U))


class TestQueries:
    def test_zero_radius_ball(self, rng):
        g = random_connected_graph(rng)
        sigma, _ = metric_from_potential(g, random_potential(rng, g))
        x = g.vertices[0]
        assert x in metric_ball(sigma, x, 0.0)

    def test_gradient_ball_is_level_set(self, unit_triangle):
        f = Potential({0: 0.0, 1: 1.0, 2: 2.0})
        sigma, _ = metric_from_potential(unit_triangle, f)
        ball = metric_ball(sigma, 0, 1.0)
        assert ball == frozenset({0, 1})

    def test_diameter(self, unit_triangle):
        f = Potential({0: 0.0, 1: 1.0, 2: 2.0})
        sigma, _ = metric_from_potential(unit_triangle, f)
        assert metric_diameter(sigma) == 2.0

    def test_greedy_net_on_hex_centers(self):
        from graphpot import contact_graph, hex_packing, packing_metric
        packing = hex_packing(0.1)
        graph = contact_graph(packing)
        data = packing_metric(packing, graph)
        size = greedy_net_size(data.metric, 0.1)
        assert 0 < size <= 400

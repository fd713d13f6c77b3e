import numpy as np
import pytest

from rcm.errors import NumericalError
from rcm.graph import (
    DisjointSets,
    Graph,
    component_sizes,
    connected_components,
    degree_stats,
    effective_resistance,
    escape_probability,
    from_edge_sample,
    largest_cluster_fraction,
    largest_component,
)
from rcm.connection import blob, sample_edges
from rcm.pointprocess import Region, RngStream, sample_poisson


def make_graph(n, weighted_edges, points=None):
    e = np.array([(i, j) for i, j, _ in weighted_edges], dtype=np.int64)
    c = np.array([w for _, _, w in weighted_edges], dtype=float)
    return Graph(n=n, edges=e.reshape(-1, 2), conductances=c, points=points)


def random_connected_graph(rng, n, extra_edges, cmax=5.0):
    # random spanning tree plus extra chords, guaranteed connected
    edges = set()
    order = rng.permutation(n)
    for k in range(1, n):
        a = int(order[rng.integers(0, k)])
        b = int(order[k])
        edges.add((min(a, b), max(a, b)))
    while len(edges) < n - 1 + extra_edges:
        a, b = rng.integers(0, n, size=2)
        if a != b:
            edges.add((min(a, b), max(a, b)))
    ew = [(i, j, float(rng.uniform(0.1, cmax))) for i, j in sorted(edges)]
    return make_graph(n, ew)


class TestComponents:
    def test_union_find_basic(self):
        ds = DisjointSets(5)
        assert ds.union(0, 1)
        assert not ds.union(1, 0)
        assert ds.union(3, 4)
        assert ds.find(4) == ds.find(3)
        assert ds.find(2) == 2

    def test_labels_first_appearance(self):
        labels = connected_components(5, np.array([[2, 3], [0, 1]]))
        assert labels.tolist() == [0, 0, 1, 1, 2]

    def test_sizes_and_largest(self):
        labels = connected_components(6, np.array([[0, 1], [2, 3], [3, 4]]))
        assert component_sizes(labels).tolist() == [2, 3, 1]
        lab, members = largest_component(labels)
        assert lab == 1
        assert members.tolist() == [2, 3, 4]

    def test_largest_tie_prefers_smallest_vertex(self):
        labels = connected_components(4, np.array([[2, 3], [0, 1]]))
        lab, members = largest_component(labels)
        assert members.tolist() == [0, 1]

    def test_fraction_complete_graph(self):
        n = 5
        edges = np.array([(i, j) for i in range(n) for j in range(i + 1, n)])
        assert largest_cluster_fraction(connected_components(n, edges)) == 1.0

    def test_fraction_edgeless(self):
        labels = connected_components(7, np.empty((0, 2), dtype=np.int64))
        assert largest_cluster_fraction(labels) == pytest.approx(1.0 / 7.0)
        assert largest_cluster_fraction(np.empty(0, dtype=np.int64)) == 0.0


class TestDegreeStats:
    def test_path_on_three(self):
        g = make_graph(3, [(0, 1, 1.0), (1, 2, 1.0)])
        stats = degree_stats(g)
        assert stats.mean == pytest.approx(4.0 / 3.0)
        assert stats.max == 2
        assert stats.histogram.tolist() == [0, 2, 1]

    def test_edgeless(self):
        g = make_graph(4, [])
        stats = degree_stats(g)
        assert stats.mean == 0.0
        assert stats.max == 0
        assert stats.histogram.tolist() == [4]

    def test_mask_keeps_boundary_edges(self):
        # star center keeps degree 3 even when the leaves are masked out
        g = make_graph(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)])
        stats = degree_stats(g, mask=np.array([True, False, False, False]))
        assert stats.mean == 3.0
        assert stats.max == 3

    def test_empty_mask(self):
        g = make_graph(3, [(0, 1, 1.0)])
        stats = degree_stats(g, mask=np.zeros(3, dtype=bool))
        assert stats.mean == 0.0 and stats.max == 0

    def test_bad_mask_rejected(self):
        g = make_graph(3, [(0, 1, 1.0)])
        with pytest.raises(ValueError):
            degree_stats(g, mask=np.ones(2, dtype=bool))


class TestGraphValidation:
    def test_rejects_bad_edges(self):
        with pytest.raises(ValueError):
            make_graph(3, [(0, 3, 1.0)])
        with pytest.raises(ValueError):
            make_graph(3, [(1, 1, 1.0)])
        with pytest.raises(ValueError):
            make_graph(3, [(1, 0, 1.0)])
        with pytest.raises(ValueError):
            make_graph(3, [(0, 1, 0.0)])
        with pytest.raises(ValueError):
            make_graph(3, [(0, 1, float("nan"))])

    def test_degrees_and_strengths(self):
        g = make_graph(3, [(0, 1, 2.0), (0, 2, 0.5), (1, 2, 1.0)])
        assert g.degree_counts().tolist() == [2, 2, 2]
        assert g.strengths().tolist() == [2.5, 3.0, 1.5]
        a = g.adjacency_csr().toarray()
        assert a[0, 1] == 2.0 and a[1, 0] == 2.0 and a[0, 0] == 0.0

    def test_from_edge_sample(self, seed):
        cloud = sample_poisson(Region.centered_box(3.0, 2), 4.0, RngStream(seed, 2))
        sample = sample_edges(cloud, blob(1.0), RngStream(seed, 3))
        g = from_edge_sample(cloud, sample)
        assert g.n == len(cloud)
        assert np.all(g.conductances == 1.0)
        assert g.points is cloud.points


class TestEffectiveResistance:
    def test_single_edge(self):
        g = make_graph(2, [(0, 1, 4.0)])
        r = effective_resistance(g, 0, 1)
        assert r.value == pytest.approx(0.25, abs=1e-12)
        assert r.method == "dense"

    def test_series_and_parallel(self):
        series = make_graph(3, [(0, 1, 2.0), (1, 2, 0.5)])
        assert effective_resistance(series, 0, 2).value == pytest.approx(
            0.5 + 2.0, abs=1e-12
        )
        parallel = make_graph(2, [(0, 1, 2.0), (0, 1, 3.0)])
        assert effective_resistance(parallel, 0, 1).value == pytest.approx(
            1.0 / 5.0, abs=1e-12
        )

    def test_balanced_bridge(self):
        g = make_graph(
            4,
            [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0), (1, 2, 1.0)],
        )
        assert effective_resistance(g, 0, 3).value == pytest.approx(1.0, abs=1e-12)

    def test_disconnected_is_infinite(self):
        g = make_graph(4, [(0, 1, 1.0), (2, 3, 1.0)])
        r = effective_resistance(g, 0, 3)
        assert np.isinf(r.value)
        assert r.method == "disconnected"
        # a sink in a foreign component is ignored when another connects
        r2 = effective_resistance(g, 0, [1, 3])
        assert r2.value == pytest.approx(1.0)

    def test_multiple_sinks_ground_together(self):
        # path 0-1-2 grounded at both ends from the middle: two unit
        # resistors in parallel
        g = make_graph(3, [(0, 1, 1.0), (1, 2, 1.0)])
        r = effective_resistance(g, 1, [0, 2])
        assert r.value == pytest.approx(0.5, abs=1e-12)

    def test_input_validation(self):
        g = make_graph(2, [(0, 1, 1.0)])
        with pytest.raises(ValueError):
            effective_resistance(g, 0, [])
        with pytest.raises(ValueError):
            effective_resistance(g, 0, 0)
        with pytest.raises(ValueError):
            effective_resistance(g, 0, 5)
        with pytest.raises(ValueError):
            effective_resistance(g, 0, 1, method="qr")

    def test_dense_vs_cg_agree(self, seed):
        rng = np.random.default_rng(seed)
        for trial in range(20):
            n = int(rng.integers(5, 50))
            g = random_connected_graph(rng, n, extra_edges=n // 2)
            sinks = [n - 1] if trial % 2 == 0 else [n - 1, n - 2]
            dense = effective_resistance(g, 0, sinks, method="dense")
            iterative = effective_resistance(g, 0, sinks, method="cg")
            assert iterative.value == pytest.approx(dense.value, abs=1e-8)
            assert iterative.iterations > 0

    def test_cg_handles_moderate_graph(self, seed):
        rng = np.random.default_rng(seed + 1)
        g = random_connected_graph(rng, 800, extra_edges=1600)
        r = effective_resistance(g, 0, 799, method="auto")
        assert r.method == "cg"
        assert r.residual < 1e-8
        spot = effective_resistance(g, 0, 799, method="dense")
        assert r.value == pytest.approx(spot.value, abs=1e-8)

    def test_cg_nonconvergence_raises(self, seed):
        rng = np.random.default_rng(seed + 2)
        g = random_connected_graph(rng, 60, extra_edges=30)
        with pytest.raises(NumericalError):
            effective_resistance(g, 0, 59, method="cg", rtol=1e-300)

    def test_rayleigh_monotone(self, seed):
        # raising any single conductance never raises the resistance
        rng = np.random.default_rng(seed + 3)
        g = random_connected_graph(rng, 25, extra_edges=15)
        base = effective_resistance(g, 0, 24).value
        for k in range(0, g.n_edges, 5):
            c = g.conductances.copy()
            c[k] *= 3.0
            bumped = Graph(n=g.n, edges=g.edges, conductances=c)
            assert effective_resistance(bumped, 0, 24).value <= base + 1e-12


class TestEscapeProbability:
    def test_single_edge_always_escapes(self):
        g = make_graph(2, [(0, 1, 7.0)])
        assert escape_probability(g, 0, 1) == pytest.approx(1.0, abs=1e-12)

    def test_triangle(self):
        g = make_graph(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])
        # from vertex 0 to vertex 1: direct step or detour through 2
        assert escape_probability(g, 0, 1) == pytest.approx(0.75, abs=1e-12)

    def test_disconnected_never_escapes(self):
        g = make_graph(4, [(0, 1, 1.0), (2, 3, 1.0)])
        assert escape_probability(g, 0, 2) == 0.0

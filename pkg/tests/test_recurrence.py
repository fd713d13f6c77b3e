import math

import numpy as np
import pytest

from rcm.connection import blob, sample_edges, truncated
from rcm.graph import Graph, effective_resistance, from_edge_sample
from rcm.pointprocess import Region, RngStream, palm_condition, sample_poisson
from rcm.recurrence import (
    boundary_cuts,
    cut_lower_bound,
    cutset_scaling_experiment,
    project_long_edges,
    resistance_profile_experiment,
)


def geo_graph(points, weighted_edges):
    pts = np.asarray(points, dtype=float)
    e = np.array([(i, j) for i, j, _ in weighted_edges], dtype=np.int64)
    c = np.array([w for _, _, w in weighted_edges], dtype=float)
    return Graph(n=len(pts), edges=e.reshape(-1, 2), conductances=c, points=pts)


class TestProjection:
    def test_integer_length_chain(self):
        g = geo_graph([[0.0, 0.0], [4.0, 0.0]], [(0, 1, 1.0)])
        res = project_long_edges(g)
        assert res.n_long_edges == 1
        assert res.n_added_vertices == 3
        assert res.graph.n == 5
        assert np.allclose(
            res.graph.points[2:], [[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]
        )
        assert np.all(res.graph.conductances == 4.0)
        assert res.max_segment_length == pytest.approx(1.0)
        # the chain is electrically the original edge
        r = effective_resistance(res.graph, 0, 1)
        assert r.value == pytest.approx(1.0, abs=1e-12)

    def test_fractional_length_rounds_up(self):
        g = geo_graph([[0.0, 0.0], [1.0, 0.5]], [(0, 1, 1.0)])
        res = project_long_edges(g)
        assert res.n_added_vertices == 1
        assert np.all(res.graph.conductances == 2.0)
        assert res.max_segment_length == pytest.approx(0.75)
        assert effective_resistance(res.graph, 0, 1).value == pytest.approx(
            1.0, abs=1e-12
        )

    def test_short_edges_untouched(self):
        g = geo_graph(
            [[0.0, 0.0], [0.5, 0.25], [0.5, -0.5]],
            [(0, 1, 2.0), (0, 2, 0.3)],
        )
        res = project_long_edges(g)
        assert res.n_long_edges == 0
        assert res.n_added_vertices == 0
        assert np.array_equal(res.graph.edges, g.edges)
        assert np.array_equal(res.graph.conductances, g.conductances)

    def test_conductance_scaling(self):
        g = geo_graph([[0.0, 0.0], [0.0, 2.5]], [(0, 1, 0.5)])
        res = project_long_edges(g)
        # three segments, each 3 * 0.5
        assert np.allclose(res.graph.conductances, 1.5)
        assert effective_resistance(res.graph, 0, 1).value == pytest.approx(
            2.0, abs=1e-12
        )

    def test_custom_threshold(self):
        g = geo_graph([[0.0, 0.0], [3.0, 0.0]], [(0, 1, 1.0)])
        res = project_long_edges(g, threshold=2.0)
        assert res.n_added_vertices == 1
        assert res.max_segment_length == pytest.approx(1.5)

    def test_idempotent(self, seed):
        cloud = sample_poisson(Region.centered_box(4.0, 2), 2.0, RngStream(seed, 3))
        sample = sample_edges(cloud, truncated(3.0, cutoff=3.0), RngStream(seed, 4))
        once = project_long_edges(from_edge_sample(cloud, sample))
        twice = project_long_edges(once.graph)
        assert twice.n_long_edges == 0
        assert twice.graph.n == once.graph.n
        assert np.array_equal(twice.graph.edges, once.graph.edges)

    def test_resistance_preserved_between_original_vertices(self, seed):
        cloud = sample_poisson(Region.centered_box(3.0, 2), 3.0, RngStream(seed, 5))
        sample = sample_edges(cloud, truncated(2.5, cutoff=4.0), RngStream(seed, 6))
        g = from_edge_sample(cloud, sample)
        labels = g.components()
        sizes = np.bincount(labels)
        comp = np.nonzero(labels == np.argmax(sizes))[0]
        assert comp.size >= 3
        src, snk = int(comp[0]), int(comp[-1])
        before = effective_resistance(g, src, snk).value
        after = effective_resistance(
            project_long_edges(g).graph, src, snk
        ).value
        assert after == pytest.approx(before, abs=1e-10)

    def test_requires_geometry(self):
        g = Graph(n=2, edges=np.array([[0, 1]]), conductances=np.array([1.0]))
        with pytest.raises(ValueError):
            project_long_edges(g)
        with pytest.raises(ValueError):
            project_long_edges(geo_graph([[0.0, 0.0]], []), threshold=0.0)


class TestBoundaryCuts:
    def test_hand_built_shells(self):
        g = geo_graph(
            [[0.0, 0.0], [1.5, 0.0], [0.0, 2.5]],
            [(0, 1, 2.0), (1, 2, 3.0)],
        )
        cuts = boundary_cuts(g, [1.0, 2.0])
        assert cuts.conductances.tolist() == [2.0, 3.0]
        assert cuts.edge_counts.tolist() == [1, 1]
        assert cuts.disjoint

    def test_spanning_edge_breaks_disjointness(self):
        g = geo_graph([[0.5, 0.0], [3.5, 0.0]], [(0, 1, 1.0)])
        cuts = boundary_cuts(g, [1.0, 2.0, 3.0])
        assert not cuts.disjoint
        with pytest.raises(ValueError):
            cut_lower_bound(cuts)

    def test_empty_cut_gives_infinite_bound(self):
        g = geo_graph([[0.0, 0.0], [0.5, 0.0]], [(0, 1, 1.0)])
        cuts = boundary_cuts(g, [2.0])
        assert cuts.conductances.tolist() == [0.0]
        assert math.isinf(cut_lower_bound(cuts))

    def test_radii_validation(self):
        g = geo_graph([[0.0, 0.0]], [])
        for bad in ([], [0.0], [2.0, 1.0], [1.0, 1.0]):
            with pytest.raises(ValueError):
                boundary_cuts(g, bad)

    def test_lower_bound_below_resistance(self, seed):
        # sampled instance: bound from disjoint integer shells versus the
        # solved resistance to the outside of the largest box
        cloud = palm_condition(
            sample_poisson(Region.centered_box(5.0, 2), 4.0, RngStream(seed, 7))
        )
        sample = sample_edges(cloud, blob(radius=1.2), RngStream(seed, 8))
        proj = project_long_edges(from_edge_sample(cloud, sample))
        g = proj.graph
        cuts = boundary_cuts(g, [1, 2, 3])
        assert cuts.disjoint
        bound = cut_lower_bound(cuts)
        depth = np.abs(g.points).max(axis=1)
        sinks = np.nonzero(depth > 4.0)[0]
        reff = effective_resistance(g, 0, sinks).value
        assert bound <= reff + 1e-8


class TestExperiments:
    def test_cutset_scaling_smoke(self, seed):
        report = cutset_scaling_experiment(
            blob(radius=1.0), rho=3.0, radii=(2, 4), replicas=5, seed=seed
        )
        assert report.normalized.shape == (5, 2)
        assert np.all(report.normalized > 0)
        assert report.q90_lo.shape == (2,)
        assert np.all(report.q90_lo <= report.q90)
        assert np.all(report.q90 <= report.q90_hi)
        again = cutset_scaling_experiment(
            blob(radius=1.0), rho=3.0, radii=(2, 4), replicas=5, seed=seed
        )
        assert np.array_equal(report.normalized, again.normalized)

    def test_cutset_validation(self, seed):
        with pytest.raises(ValueError):
            cutset_scaling_experiment(blob(), 1.0, radii=(4, 2), replicas=3, seed=seed)
        with pytest.raises(ValueError):
            cutset_scaling_experiment(blob(), 1.0, radii=(2, 4), replicas=1, seed=seed)

    def test_resistance_profile_smoke(self, seed):
        report = resistance_profile_experiment(
            blob(radius=1.2), rho=4.0, radii=(2, 4), replicas=3, seed=seed
        )
        assert report.replicas_total == 3
        assert 2 <= report.replicas_kept <= 3
        assert report.profiles.shape == (report.replicas_kept, 2)
        assert np.all(report.profiles > 0)
        assert np.all(np.isfinite(report.mean_profile))
        # resistance to a farther boundary cannot shrink
        assert report.mean_profile[1] >= report.mean_profile[0] - 1e-12

    def test_profile_needs_margin(self, seed):
        with pytest.raises(ValueError):
            resistance_profile_experiment(
                blob(), rho=3.0, radii=(2, 4), replicas=2, seed=seed, margin=0.0
            )

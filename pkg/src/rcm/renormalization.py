"""Coarse graining of a sampled graph onto a lattice of boxes.

The window is tiled exactly by half-open boxes of side 2 * epsilon.  A box
is good when the largest cluster of the subgraph induced on its own points
reaches a target size beta; that property depends only on points and edges
inside the box, so good indicators of distinct boxes are independent.  Each
nonempty box designates one cluster (largest, ties to the one holding the
smallest point index), and a coarse bond between two boxes is open when any
edge of the full graph joins their designated clusters.

Any two points in boxes whose index offset has 1-norm m are at most
2 * epsilon * (m + d) apart in the 1-norm.  Two good boxes therefore have at
least beta^2 point pairs connecting independently with probability at least
g evaluated at that distance bound, which yields the closed-form lower bound
on the coarse bond probability checked by the experiments here.  The
resulting site and bond frequencies dominate an independent lattice model
whose parameters ``dominated_lattice_parameters`` extracts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rcm.connection import ConnectionKernel, EdgeSample, sample_edges
from rcm.graph import DisjointSets
from rcm.pointprocess import (
    PointCloud,
    Region,
    build_cell_grid,
    sample_poisson,
    substream,
)


def box_distance_bound(epsilon: float, index_offset: int, dim: int = 2) -> float:
    """Largest 1-norm distance between points of boxes offset by ``index_offset``
    box steps in 1-norm."""
    if index_offset < 0:
        raise ValueError("index offset must be nonnegative")
    return 2.0 * epsilon * (index_offset + dim)


def pair_connection_bound(
    beta: int, distance: float, kernel: ConnectionKernel
) -> float:
    """Lower bound on the chance that two beta-point clusters at most
    ``distance`` apart are joined by at least one edge."""
    if beta < 1:
        raise ValueError("cluster size must be at least 1")
    g = float(kernel.probability(distance))
    return -math.expm1(beta * beta * math.log1p(-g)) if g < 1.0 else 1.0


@dataclass(frozen=True)
class BoxAnalysis:
    epsilon: float
    beta: int
    shape: tuple[int, ...]
    box_of_point: np.ndarray
    largest_cluster_size: np.ndarray
    good: np.ndarray
    designated: np.ndarray  # per point: member of its box's designated cluster

    @property
    def n_boxes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_good(self) -> int:
        return int(self.good.sum())

    def good_grid(self) -> np.ndarray:
        return self.good.reshape(self.shape)


def analyze_boxes(
    cloud: PointCloud, sample: EdgeSample, epsilon: float, beta: int
) -> BoxAnalysis:
    """Classify every box of the tiling and mark designated clusters.

    The region must tile exactly into boxes of side 2 * epsilon; a ragged
    final row would carry a different good-box law and poison comparisons
    across boxes.
    """
    if beta < 1:
        raise ValueError("cluster size threshold must be at least 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if sample.n_points != len(cloud):
        raise ValueError("edge sample does not match the cloud")
    side = 2.0 * epsilon
    extents = cloud.region.extents
    counts = np.rint(extents / side)
    if np.any(np.abs(counts * side - extents) > 1e-9 * np.maximum(1.0, extents)):
        raise ValueError(
            f"region extents {tuple(extents)} are not a multiple of the box "
            f"side {side}"
        )
    grid = build_cell_grid(cloud, side)
    n = len(cloud)
    box_of_point = grid.cell_of_point
    n_boxes = int(np.prod(grid.shape))

    ds = DisjointSets(n)
    if sample.n_edges:
        e = sample.edges
        internal = box_of_point[e[:, 0]] == box_of_point[e[:, 1]]
        for i, j in e[internal]:
            ds.union(int(i), int(j))
    roots = np.fromiter((ds.find(v) for v in range(n)), dtype=np.int64, count=n)

    largest = np.zeros(n_boxes, dtype=np.int64)
    designated = np.zeros(n, dtype=bool)
    if n:
        keys, ginv = np.unique(
            box_of_point * (n + 1) + roots, return_inverse=True
        )
        gbox = keys // (n + 1)
        sizes = np.bincount(ginv)
        min_point = np.full(keys.size, n, dtype=np.int64)
        np.minimum.at(min_point, ginv, np.arange(n))
        # group order: by box, then biggest first, then smallest point index
        order = np.lexsort((min_point, -sizes, gbox))
        first_of_box = np.ones(order.size, dtype=bool)
        first_of_box[1:] = gbox[order][1:] != gbox[order][:-1]
        chosen_groups = order[first_of_box]
        largest[gbox[chosen_groups]] = sizes[chosen_groups]
        chosen_mask = np.zeros(keys.size, dtype=bool)
        chosen_mask[chosen_groups] = True
        designated = chosen_mask[ginv]
    return BoxAnalysis(
        epsilon=float(epsilon),
        beta=int(beta),
        shape=grid.shape,
        box_of_point=box_of_point,
        largest_cluster_size=largest,
        good=largest >= beta,
        designated=designated,
    )


def coarse_bonds(sample: EdgeSample, analysis: BoxAnalysis) -> np.ndarray:
    """Open coarse bonds: sorted unique (box_a, box_b) with box_a < box_b
    joined by an edge between designated clusters."""
    if sample.n_edges == 0:
        return np.empty((0, 2), dtype=np.int64)
    e = sample.edges
    des = analysis.designated
    cross = des[e[:, 0]] & des[e[:, 1]]
    b1 = analysis.box_of_point[e[cross, 0]]
    b2 = analysis.box_of_point[e[cross, 1]]
    distinct = b1 != b2
    lo = np.minimum(b1[distinct], b2[distinct])
    hi = np.maximum(b1[distinct], b2[distinct])
    if lo.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    return np.unique(np.column_stack([lo, hi]), axis=0)


def _half_space_offsets(m: int, dim: int) -> list[tuple[int, ...]]:
    """Integer offsets with 1-norm m, one per +/- pair (first nonzero > 0)."""
    if dim != 2:
        raise ValueError("offset enumeration implemented for dimension 2")
    out = []
    for dx in range(-m, m + 1):
        dy = m - abs(dx)
        for candidate in {(dx, dy), (dx, -dy)}:
            nz = next(v for v in candidate if v != 0)
            if nz > 0:
                out.append(candidate)
    return sorted(out)


@dataclass(frozen=True)
class GoodBoxReport:
    epsilon: float
    beta: int
    rho: float
    replicas: int
    n_boxes: int
    n_good: int
    fraction: float
    se: float


def good_box_experiment(
    kernel: ConnectionKernel,
    rho: float,
    epsilon: float,
    beta: int,
    half_width: float,
    replicas: int,
    seed: int,
    dim: int = 2,
) -> GoodBoxReport:
    """Empirical good-box probability over independent replicas.

    Boxes are disjoint and the good property is box-local, so every box is
    an independent Bernoulli trial and the binomial standard error applies.
    """
    region = Region.centered_box(half_width, dim)
    n_boxes = 0
    n_good = 0
    for r in range(replicas):
        cloud = sample_poisson(region, rho, substream(seed, "goodbox-points", r))
        sample = sample_edges(cloud, kernel, substream(seed, "goodbox-edges", r))
        analysis = analyze_boxes(cloud, sample, epsilon, beta)
        n_boxes += analysis.n_boxes
        n_good += analysis.n_good
    frac = n_good / n_boxes
    return GoodBoxReport(
        epsilon=epsilon,
        beta=beta,
        rho=rho,
        replicas=replicas,
        n_boxes=n_boxes,
        n_good=n_good,
        fraction=frac,
        se=math.sqrt(frac * (1.0 - frac) / n_boxes),
    )


@dataclass(frozen=True)
class CoarseBondReport:
    epsilon: float
    beta: int
    rho: float
    index_distance: int
    distance_bound: float
    bound: float
    replicas: int
    n_good_pairs: int
    n_open: int
    frequency: float
    se: float
    pairs: np.ndarray  # (n_good_pairs, 4) rows (replica, box_a, box_b, open)

    @property
    def satisfies_bound(self) -> bool:
        """Empirical frequency at least the closed-form bound, minus four
        standard errors of sampling slack."""
        return self.frequency >= self.bound - 4.0 * self.se


def coarse_bond_experiment(
    kernel: ConnectionKernel,
    rho: float,
    epsilon: float,
    beta: int,
    index_distance: int,
    half_width: float,
    replicas: int,
    seed: int,
    dim: int = 2,
) -> CoarseBondReport:
    """Frequency of open coarse bonds between good boxes at a fixed offset.

    Counts, over all box pairs whose index offset has 1-norm
    ``index_distance``, how often both are good and their designated
    clusters are joined, and compares against the closed-form lower bound at
    the loosest compatible distance.
    """
    if index_distance < 1:
        raise ValueError("index distance must be at least 1")
    region = Region.centered_box(half_width, dim)
    offsets = _half_space_offsets(index_distance, dim)
    records = []
    for r in range(replicas):
        cloud = sample_poisson(region, rho, substream(seed, "coarse-points", r))
        sample = sample_edges(cloud, kernel, substream(seed, "coarse-edges", r))
        analysis = analyze_boxes(cloud, sample, epsilon, beta)
        open_pairs = {tuple(row) for row in coarse_bonds(sample, analysis)}
        good = analysis.good_grid()
        shape = analysis.shape
        for off in offsets:
            a_sl = []
            b_sl = []
            for extent, o in zip(shape, off):
                if o >= 0:
                    a_sl.append(slice(0, extent - o))
                    b_sl.append(slice(o, extent))
                else:
                    a_sl.append(slice(-o, extent))
                    b_sl.append(slice(0, extent + o))
            pair_good = good[tuple(a_sl)] & good[tuple(b_sl)]
            grid_ids = np.arange(analysis.n_boxes).reshape(shape)
            ga = grid_ids[tuple(a_sl)][pair_good]
            gb = grid_ids[tuple(b_sl)][pair_good]
            for x, y in zip(ga, gb):
                key = (int(min(x, y)), int(max(x, y)))
                records.append((r, key[0], key[1], int(key in open_pairs)))
    pairs = np.array(records, dtype=np.int64).reshape(-1, 4)
    n_pairs = pairs.shape[0]
    n_open = int(pairs[:, 3].sum()) if n_pairs else 0
    freq = n_open / n_pairs if n_pairs else 0.0
    se = math.sqrt(freq * (1.0 - freq) / n_pairs) if n_pairs else float("inf")
    d_bound = box_distance_bound(epsilon, index_distance, dim)
    return CoarseBondReport(
        epsilon=epsilon,
        beta=beta,
        rho=rho,
        index_distance=index_distance,
        distance_bound=d_bound,
        bound=pair_connection_bound(beta, d_bound, kernel),
        replicas=replicas,
        n_good_pairs=n_pairs,
        n_open=n_open,
        frequency=freq,
        se=se,
        pairs=pairs,
    )


def dominated_lattice_parameters(
    site_report: GoodBoxReport,
    bond_reports,
    alpha: float,
) -> tuple[float, float]:
    """Parameters (mu, lambda) of an independent lattice model sitting below
    the observed coarse frequencies.

    Sites: mu is the good-box frequency.  Bonds: the lattice opens a bond at
    index distance k with probability 1 - exp(-lambda / k^alpha), so the
    largest dominated lambda is min over k of -k^alpha * log(1 - f_k).
    Frequencies of 1 are pulled down to 1 - 1/(2 n) so the logarithm stays
    finite (a continuity correction, conservative for domination).
    """
    mu = site_report.fraction
    lam = math.inf
    for rep in bond_reports:
        n = max(rep.n_good_pairs, 1)
        f = min(rep.frequency, 1.0 - 0.5 / n)
        k = rep.index_distance
        lam = min(lam, -(k ** alpha) * math.log1p(-f))
    if math.isinf(lam):
        raise ValueError("need at least one bond report")
    return mu, lam


@dataclass(frozen=True)
class Comparison:
    name: str
    estimate: float
    reference: float
    lo: float  # 95% interval on the estimate
    hi: float
    passed: bool


@dataclass(frozen=True)
class DominationReport:
    mode: str
    comparisons: tuple[Comparison, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.comparisons)


def _interval(estimate: float, se: float) -> tuple[float, float]:
    return estimate - 1.96 * se, estimate + 1.96 * se


def domination_report(
    site_report: GoodBoxReport,
    bond_reports,
    mode: str,
    mu1: float | None = None,
    lam1: float | None = None,
    alpha: float | None = None,
    p_c: float | None = None,
) -> DominationReport:
    """Per-comparison verdicts on dominating a reference lattice model.

    ``long_range`` checks the site frequency against mu1 and each bond
    frequency at index distance k against 1 - exp(-lam1 / k^alpha).
    ``nearest_neighbor`` checks the product of the adjacent-bond frequency
    and the site frequency against a supplied percolation threshold p_c;
    the product must exceed it strictly.  Every comparison carries a 95%
    normal interval; a frequency with no observed pairs fails outright.
    """
    if not bond_reports:
        raise ValueError("need at least one bond report")
    comparisons: list[Comparison] = []
    if mode == "long_range":
        if mu1 is None or lam1 is None or alpha is None:
            raise ValueError("long_range mode needs mu1, lam1, and alpha")
        lo, hi = _interval(site_report.fraction, site_report.se)
        comparisons.append(Comparison(
            name="site_frequency_vs_mu1",
            estimate=site_report.fraction, reference=mu1,
            lo=lo, hi=hi, passed=site_report.fraction >= mu1,
        ))
        for rep in bond_reports:
            ref = -math.expm1(-lam1 / rep.index_distance ** alpha)
            ok = rep.n_good_pairs > 0 and rep.frequency >= ref
            lo, hi = _interval(rep.frequency, rep.se)
            comparisons.append(Comparison(
                name=f"bond_frequency_k{rep.index_distance}",
                estimate=rep.frequency, reference=ref,
                lo=lo, hi=hi, passed=ok,
            ))
    elif mode == "nearest_neighbor":
        if p_c is None:
            raise ValueError("nearest_neighbor mode needs p_c")
        adjacent = [r for r in bond_reports if r.index_distance == 1]
        if not adjacent:
            raise ValueError("nearest_neighbor mode needs an index-distance-1 report")
        rep = adjacent[0]
        product = site_report.fraction * rep.frequency
        # first-order error propagation for the product of two frequencies
        se = math.hypot(
            rep.frequency * site_report.se, site_report.fraction * rep.se
        )
        ok = rep.n_good_pairs > 0 and product > p_c
        lo, hi = _interval(product, se)
        comparisons.append(Comparison(
            name="site_bond_product_vs_p_c",
            estimate=product, reference=p_c, lo=lo, hi=hi, passed=ok,
        ))
    else:
        raise ValueError("mode must be 'long_range' or 'nearest_neighbor'")
    return DominationReport(mode=mode, comparisons=tuple(comparisons))

"""Long-edge projection, boundary cut-sets, and resistance experiments.

The projection rewrites every edge of 1-norm length above a threshold as a
chain of equal collinear segments, each at most the threshold long.  A chain
of k segments carries conductance k per segment times the original edge
conductance, which keeps the chain electrically identical to the edge it
replaces while making every remaining edge short.  Short edges let the
concentric boundary cut-sets be pairwise disjoint, which is what the
cut-conductance lower bound on effective resistance needs.

Two experiment drivers live here: the growth of normalized cut conductances
C / (n log n) over doubling radii, and effective-resistance profiles from the
origin to the outside of growing boxes.  Both summarize many independent
replicas driven by named substreams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rcm.connection import ConnectionKernel, sample_edges
from rcm.graph import (
    Graph,
    effective_resistance,
    from_edge_sample,
    largest_component,
)
from rcm.pointprocess import (
    Region,
    palm_condition,
    sample_poisson,
    substream,
)
from rcm.stats import bootstrap_quantile_ci, hill_tail_exponent, linear_fit


@dataclass(frozen=True)
class ProjectionResult:
    graph: Graph
    n_original_vertices: int
    n_long_edges: int
    n_added_vertices: int
    max_segment_length: float
    threshold: float


def project_long_edges(graph: Graph, threshold: float = 1.0) -> ProjectionResult:
    """Replace long edges by chains of collinear segments.

    An edge of 1-norm length L > threshold becomes k = ceil(L / threshold)
    segments over k - 1 new equally spaced vertices, every segment carrying
    k times the edge's conductance.  Edges at or below the threshold pass
    through unchanged.  Requires vertex coordinates.
    """
    if graph.points is None:
        raise ValueError("projection needs vertex coordinates")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    pts = graph.points
    lengths = np.abs(pts[graph.edges[:, 1]] - pts[graph.edges[:, 0]]).sum(axis=1)
    long = lengths > threshold
    n_long = int(long.sum())
    max_seg = float(lengths[~long].max()) if np.any(~long) else 0.0

    if n_long == 0:
        return ProjectionResult(
            graph=graph,
            n_original_vertices=graph.n,
            n_long_edges=0,
            n_added_vertices=0,
            max_segment_length=max_seg,
            threshold=float(threshold),
        )

    li = graph.edges[long, 0]
    lj = graph.edges[long, 1]
    lc = graph.conductances[long]
    ll = lengths[long]
    k = np.ceil(ll / threshold).astype(np.int64)
    max_seg = max(max_seg, float((ll / k).max()))

    # interior nodes at fractions 1/k .. (k-1)/k along the straight line,
    # numbered consecutively after the original vertices, edge by edge
    n_inner = k - 1
    inner_start = graph.n + np.concatenate([[0], np.cumsum(n_inner)[:-1]])
    total_inner = int(n_inner.sum())
    owner = np.repeat(np.arange(k.size), n_inner)
    step = np.arange(total_inner) - np.repeat(inner_start - graph.n, n_inner) + 1
    frac = (step / k[owner])[:, None]
    inner_pts = pts[li[owner]] + frac * (pts[lj[owner]] - pts[li[owner]])

    # segment t of a k-chain joins node t to node t + 1, where node 0 is the
    # original left endpoint, node k the right one, and the rest are new
    seg_owner = np.repeat(np.arange(k.size), k)
    total_seg = int(k.sum())
    seg_start = np.concatenate([[0], np.cumsum(k)[:-1]])
    t = np.arange(total_seg) - np.repeat(seg_start, k)
    left = np.where(t == 0, li[seg_owner], inner_start[seg_owner] + t - 1)
    right = np.where(
        t == k[seg_owner] - 1, lj[seg_owner], inner_start[seg_owner] + t
    )
    seg_edges = np.column_stack(
        [np.minimum(left, right), np.maximum(left, right)]
    )
    seg_cond = (k * lc)[seg_owner]

    projected = Graph(
        n=graph.n + total_inner,
        edges=np.vstack([graph.edges[~long], seg_edges]),
        conductances=np.concatenate([graph.conductances[~long], seg_cond]),
        points=np.vstack([pts, inner_pts]),
    )
    return ProjectionResult(
        graph=projected,
        n_original_vertices=graph.n,
        n_long_edges=n_long,
        n_added_vertices=total_inner,
        max_segment_length=max_seg,
        threshold=float(threshold),
    )


@dataclass(frozen=True)
class CutReport:
    """Conductance crossing each concentric box boundary.

    Boxes are closed sup-norm balls [-n, n]^d.  An edge belongs to the cut
    at radius n when exactly one endpoint lies inside.  ``disjoint`` records
    whether every edge appeared in at most one cut, a precondition for the
    resistance lower bound.
    """

    radii: tuple[float, ...]
    conductances: np.ndarray
    edge_counts: np.ndarray
    disjoint: bool


def boundary_cuts(graph: Graph, radii) -> CutReport:
    if graph.points is None:
        raise ValueError("cut-sets need vertex coordinates")
    radii = tuple(float(r) for r in radii)
    if not radii or any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    if list(radii) != sorted(set(radii)):
        raise ValueError("radii must be strictly increasing")
    depth = np.abs(graph.points).max(axis=1)
    a = depth[graph.edges[:, 0]]
    b = depth[graph.edges[:, 1]]
    conds = np.empty(len(radii))
    counts = np.empty(len(radii), dtype=np.int64)
    hits = np.zeros(graph.n_edges, dtype=np.int64)
    for k, r in enumerate(radii):
        in_a = a <= r
        in_b = b <= r
        crossing = in_a != in_b
        conds[k] = graph.conductances[crossing].sum()
        counts[k] = int(crossing.sum())
        hits += crossing
    return CutReport(
        radii=radii,
        conductances=conds,
        edge_counts=counts,
        disjoint=bool(np.all(hits <= 1)),
    )


def cut_lower_bound(report: CutReport) -> float:
    """Resistance lower bound: sum of 1 / C over disjoint cuts.

    An empty cut (zero conductance) disconnects inside from outside, so the
    bound is infinite.  Overlapping cuts invalidate the inequality and are
    rejected.
    """
    if not report.disjoint:
        raise ValueError(
            "cuts share edges; project long edges before bounding resistance"
        )
    if np.any(report.conductances == 0.0):
        return float("inf")
    return float(np.sum(1.0 / report.conductances))


# -- experiment drivers ------------------------------------------------------


@dataclass(frozen=True)
class CutsetScalingReport:
    radii: tuple[int, ...]
    replicas: int
    normalized: np.ndarray  # (replicas, len(radii)) values of C / (n log n)
    q90: np.ndarray
    q90_lo: np.ndarray
    q90_hi: np.ndarray
    nonincreasing: bool
    nondecreasing: bool
    tail_exponent_last: float


def cutset_scaling_experiment(
    kernel: ConnectionKernel,
    rho: float,
    radii,
    replicas: int,
    seed: int,
    margin_factor: float = 1.5,
    dim: int = 2,
    threshold: float = 1.0,
    pair_budget: int = 50_000_000,
) -> CutsetScalingReport:
    """Distribution of normalized cut conductances over doubling radii.

    Each radius gets its own window, ``margin_factor`` times the radius, and
    its own replicas; the cut at depth n collects conductance from pairs at
    every scale up to the window, so holding the window proportional to the
    radius keeps the truncation comparable across radii instead of pinching
    the largest one against a fixed boundary.  The report carries C /
    (n log n) per replica, the 90th percentile per radius with a bootstrap
    interval, and both monotonicity verdicts on the point estimates.
    """
    radii = tuple(int(r) for r in radii)
    if any(r < 2 for r in radii) or list(radii) != sorted(set(radii)):
        raise ValueError("radii must be increasing integers, at least 2")
    if replicas < 2:
        raise ValueError("need at least 2 replicas")
    if not margin_factor > 1.0:
        raise ValueError("margin_factor must exceed 1")
    out = np.empty((replicas, len(radii)))
    for k, n in enumerate(radii):
        window = Region.centered_box(margin_factor * n, dim)
        norm = n * math.log(n)
        for r in range(replicas):
            cloud = sample_poisson(
                window, rho, substream(seed, f"cutset-points-{n}", r)
            )
            sample = sample_edges(
                cloud, kernel, substream(seed, f"cutset-edges-{n}", r),
                pair_budget=pair_budget,
            )
            proj = project_long_edges(from_edge_sample(cloud, sample), threshold)
            cuts = boundary_cuts(proj.graph, (n,))
            out[r, k] = cuts.conductances[0] / norm
    q90 = np.empty(len(radii))
    lo = np.empty(len(radii))
    hi = np.empty(len(radii))
    for k in range(len(radii)):
        q90[k], lo[k], hi[k] = bootstrap_quantile_ci(
            out[:, k], 0.9, substream(seed, "cutset-boot", k)
        )
    # the tail index is only informative with a real sample behind it
    tail = hill_tail_exponent(out[:, -1]) if replicas >= 30 else float("nan")
    return CutsetScalingReport(
        radii=radii,
        replicas=replicas,
        normalized=out,
        q90=q90,
        q90_lo=lo,
        q90_hi=hi,
        nonincreasing=bool(np.all(np.diff(q90) <= 0.0)),
        nondecreasing=bool(np.all(np.diff(q90) >= 0.0)),
        tail_exponent_last=tail,
    )


@dataclass(frozen=True)
class ResistanceProfileReport:
    radii: tuple[int, ...]
    replicas_total: int
    replicas_kept: int
    kept: np.ndarray  # (replicas,) bool, False where the replica was dropped
    resamples: int  # extra clouds drawn to put the origin in the big cluster
    profiles: np.ndarray  # (kept, len(radii)) resistances
    residuals: np.ndarray  # (kept, len(radii)) solver residuals
    mean_profile: np.ndarray
    slope_vs_log_radius: float
    intercept: float
    r2: float
    increments: np.ndarray  # mean R(2n) - R(n) per consecutive pair
    increments_decreasing: bool


def resistance_profile_experiment(
    kernel: ConnectionKernel,
    rho: float,
    radii,
    replicas: int,
    seed: int,
    margin: float = 2.0,
    dim: int = 2,
    threshold: float = 1.0,
    pair_budget: int = 50_000_000,
    method: str = "auto",
) -> ResistanceProfileReport:
    """Effective resistance from the origin to outside each box radius.

    Clouds are origin-conditioned and the origin must land in the largest
    cluster; a replica that misses is redrawn up to 100 times and then
    dropped (and counted).  A kept replica whose cluster still fails to
    reach beyond some radius records an infinite resistance and is dropped
    as well.  The trend summary fits mean resistance against log radius and
    reports consecutive increments.
    """
    radii = tuple(int(r) for r in radii)
    if any(r < 1 for r in radii) or list(radii) != sorted(set(radii)):
        raise ValueError("radii must be increasing positive integers")
    window = Region.centered_box(max(radii) + margin, dim)
    rows = []
    resid_rows = []
    kept_mask = np.zeros(replicas, dtype=bool)
    resamples = 0
    for r in range(replicas):
        g = None
        for attempt in range(100):
            cloud = palm_condition(
                sample_poisson(
                    window, rho, substream(seed, "profile-points", 128 * r + attempt)
                )
            )
            sample = sample_edges(
                cloud, kernel, substream(seed, "profile-edges", 128 * r + attempt),
                pair_budget=pair_budget,
            )
            base = from_edge_sample(cloud, sample)
            _, members = largest_component(base.components())
            if members.size and members[0] == 0:
                g = project_long_edges(base, threshold).graph
                break
            resamples += 1
        if g is None:
            continue
        depth = np.abs(g.points).max(axis=1)
        profile = np.empty(len(radii))
        resid = np.empty(len(radii))
        for k, n in enumerate(radii):
            sinks = np.nonzero(depth > n)[0]
            if sinks.size == 0:
                raise ValueError(
                    f"no vertices beyond radius {n}; enlarge the margin"
                )
            solved = effective_resistance(g, 0, sinks, method=method)
            profile[k] = solved.value
            resid[k] = solved.residual
        if np.all(np.isfinite(profile)):
            kept_mask[r] = True
            rows.append(profile)
            resid_rows.append(resid)
    kept = len(rows)
    if kept < 2:
        raise ValueError(
            f"only {kept} of {replicas} replicas connected; raise the intensity"
        )
    profiles = np.array(rows)
    mean_profile = profiles.mean(axis=0)
    slope, intercept, r2 = linear_fit(np.log(radii), mean_profile)
    increments = np.diff(mean_profile)
    return ResistanceProfileReport(
        radii=radii,
        replicas_total=replicas,
        replicas_kept=kept,
        kept=kept_mask,
        resamples=resamples,
        profiles=profiles,
        residuals=np.array(resid_rows),
        mean_profile=mean_profile,
        slope_vs_log_radius=slope,
        intercept=intercept,
        r2=r2,
        increments=increments,
        increments_decreasing=bool(np.all(np.diff(increments) < 0.0)),
    )

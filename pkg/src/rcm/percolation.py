"""Cluster surveys of sampled graphs and intensity threshold search."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rcm.connection import ConnectionKernel, sample_edges
from rcm.errors import BracketingError
from rcm.graph import component_sizes, connected_components
from rcm.pointprocess import Region, sample_poisson, substream


@dataclass(frozen=True)
class PercolationReport:
    rho: float
    half_width: float
    replicas: int
    fractions: tuple[float, ...]  # largest cluster share per replica
    n_points: tuple[int, ...]
    n_edges: tuple[int, ...]
    degrees: tuple[float, ...]
    mean_fraction: float
    se: float
    mean_points: float
    mean_degree: float


def percolation_fraction(
    kernel: ConnectionKernel,
    rho: float,
    half_width: float,
    replicas: int,
    seed: int,
    dim: int = 2,
    pair_budget: int = 50_000_000,
    label: str = "percolation",
) -> PercolationReport:
    """Share of points in the largest cluster, averaged over replicas."""
    if replicas < 1:
        raise ValueError("need at least one replica")
    region = Region.centered_box(half_width, dim)
    fractions = []
    n_points = []
    n_edges = []
    degree = []
    for r in range(replicas):
        cloud = sample_poisson(region, rho, substream(seed, f"{label}-pts", r))
        sample = sample_edges(
            cloud, kernel, substream(seed, f"{label}-edges", r),
            pair_budget=pair_budget,
        )
        n = len(cloud)
        n_points.append(n)
        n_edges.append(sample.n_edges)
        if n == 0:
            fractions.append(0.0)
            degree.append(0.0)
            continue
        labels = connected_components(n, sample.edges)
        fractions.append(float(component_sizes(labels).max()) / n)
        degree.append(2.0 * sample.n_edges / n)
    fr = np.asarray(fractions)
    se = float(fr.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return PercolationReport(
        rho=float(rho),
        half_width=float(half_width),
        replicas=replicas,
        fractions=tuple(fractions),
        n_points=tuple(n_points),
        n_edges=tuple(n_edges),
        degrees=tuple(degree),
        mean_fraction=float(fr.mean()),
        se=se,
        mean_points=float(np.mean(n_points)),
        mean_degree=float(np.mean(degree)),
    )


@dataclass(frozen=True)
class ThresholdResult:
    target: float
    lo: float
    hi: float
    estimate: float
    status: str  # "bracketed" or "saturated_low"
    probes: tuple[tuple[float, float], ...]  # (rho, mean_fraction) pairs


def intensity_threshold(
    kernel: ConnectionKernel,
    target: float,
    lo: float,
    hi: float,
    half_width: float,
    replicas: int,
    seed: int,
    iterations: int = 12,
    dim: int = 2,
    pair_budget: int = 50_000_000,
) -> ThresholdResult:
    """Bisect the intensity at which the largest-cluster share hits a target.

    The share is monotone in intensity in expectation, so bisection on the
    replica-averaged share converges to the crossing point.  If the lower
    endpoint already meets the target the bracket collapses there
    ("saturated_low"); if the upper endpoint stays below the target there is
    no crossing inside the bracket and that is an error worth surfacing.
    """
    if not (0.0 < target < 1.0):
        raise ValueError("target share must lie strictly inside (0, 1)")
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    probes: list[tuple[float, float]] = []

    def f(rho: float, tag: str) -> float:
        rep = percolation_fraction(
            kernel, rho, half_width, replicas, seed,
            dim=dim, pair_budget=pair_budget, label=f"threshold-{tag}",
        )
        probes.append((rho, rep.mean_fraction))
        return rep.mean_fraction

    f_lo = f(lo, "lo")
    if f_lo >= target:
        return ThresholdResult(
            target=target, lo=lo, hi=hi, estimate=lo,
            status="saturated_low", probes=tuple(probes),
        )
    f_hi = f(hi, "hi")
    if f_hi < target:
        raise BracketingError(
            f"largest-cluster share stays below {target} on [{lo}, {hi}]: "
            f"f({lo})={f_lo:.4f}, f({hi})={f_hi:.4f}"
        )
    a, b = lo, hi
    for it in range(iterations):
        mid = 0.5 * (a + b)
        if f(mid, f"it{it}") >= target:
            b = mid
        else:
            a = mid
    return ThresholdResult(
        target=target, lo=lo, hi=hi, estimate=0.5 * (a + b),
        status="bracketed", probes=tuple(probes),
    )

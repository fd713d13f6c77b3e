"""Long-range bond-site percolation on a finite lattice window.

Sites of a d-dimensional grid are open independently with probability mu.
Bonds between sites at 1-norm distance m open independently with probability
1 - exp(-lambda / m^alpha), sampled per integer offset: the window holds
N_delta = prod(side_i - |delta_i|) candidate pairs at offset delta, so a
binomial count plus a uniform without-replacement draw reproduces the
independent bond field exactly.  Offsets beyond a 1-norm cutoff are not
sampled; their total expected bond mass per site is computed and reported so
a user can judge the truncation.

This lattice model is the comparison target for the coarse-grained box
process: its site and bond probabilities sit below the good-box and
coarse-bond frequencies, which is the domination direction that transfers
percolation from the lattice to the continuum graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rcm.graph import Graph, connected_components
from rcm.pointprocess import RngStream
from rcm.stats import draw_without_replacement


def bond_probability(lam: float, alpha: float, distance: float) -> float:
    if distance <= 0:
        raise ValueError("bond distance must be positive")
    return -math.expm1(-lam * float(distance) ** -alpha)


def skipped_bond_mass(
    lam: float, alpha: float, k_max: int, dim: int = 2, tol: float = 1e-12
) -> float:
    """Expected bonds per site at 1-norm distance beyond the cutoff.

    Counts canonical (half-space) offsets: 2m of them at distance m in two
    dimensions.  Infinite when alpha <= dim, which signals an ill-posed
    truncation rather than an error in sampling.
    """
    if dim != 2:
        raise ValueError("mass bookkeeping implemented for dimension 2")
    if alpha <= dim:
        return float("inf")
    total = 0.0
    last = k_max
    for m in range(k_max + 1, k_max + 10_001):
        term = 2.0 * m * bond_probability(lam, alpha, m)
        total += term
        last = m
        if term < tol * max(total, 1e-300):
            break
    # midpoint-rule integral for the remaining power-law tail
    total += 2.0 * lam * ((last + 0.5) ** (2.0 - alpha)) / (alpha - 2.0)
    return total


def _canonical_offsets(k_max: int) -> list[tuple[int, int]]:
    out = []
    for dx in range(0, k_max + 1):
        for dy in range(-k_max, k_max + 1):
            if dx + abs(dy) == 0 or dx + abs(dy) > k_max:
                continue
            if dx == 0 and dy < 0:
                continue
            out.append((dx, dy))
    return sorted(out)


@dataclass(frozen=True)
class LatticeSample:
    shape: tuple[int, ...]
    mu: float
    lam: float
    alpha: float
    k_max: int
    open_sites: np.ndarray  # bool, len prod(shape)
    bonds: np.ndarray  # (m, 2) flat site pairs, a < b, sorted
    skipped_mass: float
    seed: int
    stream_id: int

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_open(self) -> int:
        return int(self.open_sites.sum())

    def open_grid(self) -> np.ndarray:
        return self.open_sites.reshape(self.shape)


def sample_lattice(
    shape,
    mu: float,
    lam: float,
    alpha: float,
    k_max: int,
    stream: RngStream,
) -> LatticeSample:
    """Draw one bond-site configuration on the window.

    Bonds are sampled between all site pairs regardless of site states;
    consumers intersect with open sites.  Deterministic given the stream:
    sites first, then offsets in a fixed sorted order.
    """
    shape = tuple(int(s) for s in shape)
    if len(shape) != 2 or any(s < 2 for s in shape):
        raise ValueError("shape must be two sides of at least 2")
    if not (0.0 <= mu <= 1.0):
        raise ValueError("site probability must lie in [0, 1]")
    if lam <= 0 or alpha <= 0:
        raise ValueError("bond parameters must be positive")
    if k_max < 1:
        raise ValueError("offset cutoff must be at least 1")
    rng = stream.generator()
    sx, sy = shape
    n_sites = sx * sy
    open_sites = rng.random(n_sites) < mu

    rows = []
    for dx, dy in _canonical_offsets(k_max):
        nx, ny = sx - dx, sy - abs(dy)
        if nx <= 0 or ny <= 0:
            continue
        n_pairs = nx * ny
        q = bond_probability(lam, alpha, dx + abs(dy))
        count = int(rng.binomial(n_pairs, q))
        if count == 0:
            continue
        flat = draw_without_replacement(rng, n_pairs, count)
        ux, uy = np.divmod(flat, ny)
        if dy < 0:
            uy = uy - dy  # shift up so u + delta stays in the window
        a = ux * sy + uy
        b = (ux + dx) * sy + (uy + dy)
        rows.append(np.column_stack([np.minimum(a, b), np.maximum(a, b)]))
    if rows:
        bonds = np.vstack(rows)
        bonds = bonds[np.lexsort((bonds[:, 1], bonds[:, 0]))]
    else:
        bonds = np.empty((0, 2), dtype=np.int64)
    return LatticeSample(
        shape=shape,
        mu=float(mu),
        lam=float(lam),
        alpha=float(alpha),
        k_max=int(k_max),
        open_sites=open_sites,
        bonds=bonds,
        skipped_mass=skipped_bond_mass(lam, alpha, k_max),
        seed=stream.seed,
        stream_id=stream.stream_id,
    )


def lattice_graph(sample: LatticeSample) -> Graph:
    """Unit-conductance graph on open sites; closed sites stay isolated.

    Vertex v sits at integer coordinates divmod(v, side_y).
    """
    a, b = sample.bonds[:, 0], sample.bonds[:, 1]
    keep = sample.open_sites[a] & sample.open_sites[b]
    edges = sample.bonds[keep]
    sx, sy = sample.shape
    coords = np.stack(np.divmod(np.arange(sx * sy), sy), axis=1).astype(float)
    return Graph(
        n=sample.n_sites,
        edges=edges,
        conductances=np.ones(len(edges)),
        points=coords,
    )


def largest_open_cluster_fraction(sample: LatticeSample) -> float:
    """Size of the largest open-site cluster over the number of open sites."""
    if sample.n_open == 0:
        return 0.0
    g = lattice_graph(sample)
    labels = connected_components(g.n, g.edges)
    sizes = np.bincount(labels[sample.open_sites])
    return float(sizes.max()) / sample.n_open

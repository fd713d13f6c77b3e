"""Weighted graphs over sampled clouds: components and effective resistance.

A ``Graph`` is an edge list with positive conductances over vertices
0..n-1, optionally carrying the vertex coordinates.  Connectivity uses a
plain array union-find.  Effective resistance solves the grounded
conductance-Laplacian system two ways, a dense factorization for small
systems and Jacobi-preconditioned conjugate gradients for large ones; both
stay available so one can audit the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg as _cg

from rcm.connection import EdgeSample
from rcm.errors import NumericalError
from rcm.pointprocess import PointCloud

DENSE_LIMIT = 500


class DisjointSets:
    """Array union-find with path halving and union by size."""

    __slots__ = ("parent", "size")

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return int(x)

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def connected_components(n: int, edges: np.ndarray) -> np.ndarray:
    """Component label per vertex, numbered by first appearance.

    Label order is deterministic: component k contains a smaller minimum
    vertex index than component k+1.
    """
    ds = DisjointSets(n)
    for i, j in np.asarray(edges, dtype=np.int64).reshape(-1, 2):
        ds.union(int(i), int(j))
    roots = np.fromiter((ds.find(v) for v in range(n)), dtype=np.int64, count=n)
    labels = np.empty(n, dtype=np.int64)
    seen: dict[int, int] = {}
    for v, r in enumerate(roots):
        labels[v] = seen.setdefault(int(r), len(seen))
    return labels


@dataclass(frozen=True)
class Graph:
    n: int
    edges: np.ndarray
    conductances: np.ndarray
    points: np.ndarray | None = None

    def __post_init__(self):
        e = np.ascontiguousarray(self.edges, dtype=np.int64).reshape(-1, 2)
        c = np.ascontiguousarray(self.conductances, dtype=np.float64).reshape(-1)
        if c.shape[0] != e.shape[0]:
            raise ValueError("one conductance per edge required")
        if e.size:
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] >= e[:, 1]):
                raise ValueError("edges must satisfy i < j")
        if np.any(~np.isfinite(c)) or np.any(c <= 0):
            raise ValueError("conductances must be positive and finite")
        e.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "conductances", c)
        if self.points is not None:
            p = np.ascontiguousarray(self.points, dtype=np.float64)
            if p.shape[0] != self.n:
                raise ValueError("points must cover all vertices")
            p.setflags(write=False)
            object.__setattr__(self, "points", p)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def degree_counts(self) -> np.ndarray:
        """Number of incident edges per vertex (parallel edges all count)."""
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    def strengths(self) -> np.ndarray:
        """Total conductance at each vertex."""
        s = np.zeros(self.n)
        np.add.at(s, self.edges[:, 0], self.conductances)
        np.add.at(s, self.edges[:, 1], self.conductances)
        return s

    def adjacency_csr(self) -> sparse.csr_array:
        """Symmetric weighted adjacency."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.concatenate([self.conductances, self.conductances])
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        a = sparse.coo_array((data, (rows, cols)), shape=(self.n, self.n))
        return a.tocsr()

    def components(self) -> np.ndarray:
        return connected_components(self.n, self.edges)


def from_edge_sample(cloud: PointCloud, sample: EdgeSample) -> Graph:
    """Unit-conductance graph on the sampled cloud."""
    if sample.n_points != len(cloud):
        raise ValueError("edge sample does not match the cloud")
    return Graph(
        n=len(cloud),
        edges=sample.edges,
        conductances=np.ones(sample.n_edges),
        points=cloud.points,
    )


def component_sizes(labels: np.ndarray) -> np.ndarray:
    return np.bincount(labels)


def largest_component(labels: np.ndarray) -> tuple[int, np.ndarray]:
    """Label and members of the largest component.

    Size ties resolve to the component containing the smallest vertex index,
    which is the lowest label under first-appearance numbering.
    """
    sizes = component_sizes(labels)
    label = int(np.argmax(sizes))
    return label, np.nonzero(labels == label)[0]


def largest_cluster_fraction(labels: np.ndarray) -> float:
    """Share of vertices in the largest component."""
    if labels.size == 0:
        return 0.0
    return float(component_sizes(labels).max()) / labels.size


@dataclass(frozen=True)
class DegreeStats:
    mean: float
    max: int
    histogram: np.ndarray  # histogram[k] = number of vertices of degree k


def degree_stats(graph: Graph, mask: np.ndarray | None = None) -> DegreeStats:
    """Degree statistics, optionally restricted to a vertex subset.

    Degrees always count all incident edges; the mask only selects which
    vertices enter the statistics, so interior vertices keep their edges to
    the boundary layer.
    """
    counts = graph.degree_counts()
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (graph.n,):
            raise ValueError("mask must have one entry per vertex")
        counts = counts[mask]
    if counts.size == 0:
        return DegreeStats(mean=0.0, max=0, histogram=np.zeros(1, dtype=np.int64))
    return DegreeStats(
        mean=float(counts.mean()),
        max=int(counts.max()),
        histogram=np.bincount(counts).astype(np.int64),
    )


@dataclass(frozen=True)
class ResistanceResult:
    value: float
    method: str
    n_unknowns: int
    iterations: int = 0
    residual: float = 0.0


def _laplacian_reduced(graph: Graph, keep: np.ndarray) -> sparse.csr_array:
    pos = -np.ones(graph.n, dtype=np.int64)
    pos[keep] = np.arange(keep.size)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    c = graph.conductances
    strengths = graph.strengths()
    rows = [np.arange(keep.size)]
    cols = [np.arange(keep.size)]
    data = [strengths[keep]]
    both = (pos[i] >= 0) & (pos[j] >= 0)
    if np.any(both):
        bi, bj, bc = pos[i[both]], pos[j[both]], c[both]
        rows.extend([bi, bj])
        cols.extend([bj, bi])
        data.extend([-bc, -bc])
    lap = sparse.coo_array(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(keep.size, keep.size),
    )
    return lap.tocsr()


def effective_resistance(
    graph: Graph,
    source: int,
    sinks,
    method: str = "auto",
    rtol: float = 1e-10,
) -> ResistanceResult:
    """Resistance between a source vertex and a grounded sink set.

    Solves L_red x = e_source on the source's component with the sinks
    removed; the resistance is x[source].  A source disconnected from every
    sink gives value inf with method "disconnected".
    """
    sinks = np.unique(np.atleast_1d(np.asarray(sinks, dtype=np.int64)))
    if sinks.size == 0:
        raise ValueError("sink set is empty")
    if not (0 <= source < graph.n) or sinks.min() < 0 or sinks.max() >= graph.n:
        raise ValueError("vertex index out of range")
    if np.any(sinks == source):
        raise ValueError("source lies in the sink set")
    if method not in ("auto", "dense", "cg"):
        raise ValueError(f"unknown method {method!r}")

    labels = graph.components()
    if not np.any(labels[sinks] == labels[source]):
        return ResistanceResult(
            value=float("inf"), method="disconnected", n_unknowns=0
        )

    in_comp = labels == labels[source]
    keep_mask = in_comp.copy()
    keep_mask[sinks] = False
    keep = np.nonzero(keep_mask)[0]
    lap = _laplacian_reduced(graph, keep)
    b = np.zeros(keep.size)
    src_pos = int(np.searchsorted(keep, source))
    b[src_pos] = 1.0

    if method == "auto":
        method = "dense" if keep.size <= DENSE_LIMIT else "cg"

    if method == "dense":
        x = np.linalg.solve(lap.toarray(), b)
        res = float(np.linalg.norm(lap @ x - b))
        return ResistanceResult(
            value=float(x[src_pos]),
            method="dense",
            n_unknowns=keep.size,
            residual=res,
        )

    maxiter = int(50 * math.sqrt(keep.size)) + 10
    diag = lap.diagonal()
    precond = sparse.dia_array((1.0 / diag[None, :], [0]), shape=lap.shape)
    count = {"it": 0}

    def _tick(_):
        count["it"] += 1

    x, info = _cg(lap, b, rtol=rtol, atol=0.0, maxiter=maxiter, M=precond,
                  callback=_tick)
    if info != 0:
        raise NumericalError(
            f"conjugate gradients did not converge in {maxiter} iterations "
            f"(n={keep.size}, info={info})"
        )
    res = float(np.linalg.norm(lap @ x - b))
    return ResistanceResult(
        value=float(x[src_pos]),
        method="cg",
        n_unknowns=keep.size,
        iterations=count["it"],
        residual=res,
    )


def escape_probability(graph: Graph, source: int, sinks, **kwargs) -> float:
    """Chance the conductance-weighted walk from source hits the sinks
    before returning to the source: 1 / (strength(source) * R_eff)."""
    r = effective_resistance(graph, source, sinks, **kwargs)
    if math.isinf(r.value):
        return 0.0
    c = float(graph.strengths()[source])
    if c <= 0 or r.value <= 0:
        raise NumericalError("escape probability undefined for this graph")
    return 1.0 / (c * r.value)

"""Conductance-weighted random walks on sampled graphs.

The walk at a vertex steps to a neighbor with probability proportional to
the edge conductance.  Escape experiments launch many independent walks from
a source and count how often they reach a sink set before returning to the
source; the estimate comes with its binomial standard error so callers can
compare it against 1 / (strength(source) * R_eff) at a stated confidence.

Walks run in lockstep over a CSR scan of the adjacency: one uniform per
active walk per round, so a replica is a fixed function of its stream.  A
linear-system route (harmonic hit probabilities) is provided alongside the
sampler as an exact cross-check on small graphs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rcm.errors import NumericalError
from rcm.graph import Graph
from rcm.pointprocess import RngStream


def _csr_tables(graph: Graph):
    a = graph.adjacency_csr()
    indptr = a.indptr.astype(np.int64)
    indices = a.indices.astype(np.int64)
    cum = np.cumsum(a.data)
    row_base = np.concatenate([[0.0], cum])[indptr[:-1]]
    strengths = graph.strengths()
    return indptr, indices, cum, row_base, strengths


def transition_matrix(graph: Graph) -> np.ndarray:
    """Dense one-step kernel P[v, u] = c(v,u) / c(v).  Small graphs only.

    Isolated vertices get an absorbing self-loop so rows still sum to one.
    """
    a = graph.adjacency_csr().toarray()
    s = a.sum(axis=1)
    p = np.zeros_like(a)
    live = s > 0
    p[live] = a[live] / s[live, None]
    for v in np.nonzero(~live)[0]:
        p[v, v] = 1.0
    return p


@dataclass(frozen=True)
class EscapeEstimate:
    n_walks: int
    n_escaped: int
    frequency: float
    se: float
    longest_walk: int


def escape_frequency(
    graph: Graph,
    source: int,
    sinks,
    n_walks: int,
    stream: RngStream,
    max_steps: int = 1_000_000,
) -> EscapeEstimate:
    """Monte Carlo estimate of the escape probability from ``source``.

    Each walk starts at the source, and ends either on first return to the
    source (failure) or on first entry into the sink set (escape).  Walks
    exceeding ``max_steps`` rounds abort the whole estimate; silently
    truncating them would bias the frequency.
    """
    sinks = np.unique(np.atleast_1d(np.asarray(sinks, dtype=np.int64)))
    if sinks.size == 0:
        raise ValueError("sink set is empty")
    if np.any(sinks == source):
        raise ValueError("source lies in the sink set")
    if n_walks < 1:
        raise ValueError("need at least one walk")
    indptr, indices, cum, row_base, strengths = _csr_tables(graph)
    if strengths[source] == 0.0:
        return EscapeEstimate(n_walks, 0, 0.0, 0.0, 0)

    is_sink = np.zeros(graph.n, dtype=bool)
    is_sink[sinks] = True
    rng = stream.generator()

    position = np.full(n_walks, source, dtype=np.int64)
    active = np.ones(n_walks, dtype=bool)
    escaped = np.zeros(n_walks, dtype=bool)
    rounds = 0
    while True:
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        if rounds >= max_steps:
            raise NumericalError(
                f"{idx.size} walks still running after {max_steps} rounds"
            )
        verts = position[idx]
        # dead-end vertices other than the source cannot appear: the walk
        # entered through an edge it can leave by
        r = rng.random(idx.size)
        targets = np.searchsorted(
            cum, row_base[verts] + r * strengths[verts], side="right"
        )
        # rounding guard: keep the pick inside the vertex's own row
        targets = np.clip(targets, indptr[verts], indptr[verts + 1] - 1)
        nxt = indices[targets]
        position[idx] = nxt
        hit_sink = is_sink[nxt]
        hit_home = nxt == source
        escaped[idx[hit_sink]] = True
        active[idx] = ~(hit_sink | hit_home)
        rounds += 1

    k = int(escaped.sum())
    freq = k / n_walks
    se = float(np.sqrt(freq * (1.0 - freq) / n_walks))
    return EscapeEstimate(
        n_walks=n_walks,
        n_escaped=k,
        frequency=freq,
        se=se,
        longest_walk=rounds,
    )


def escape_probability_linear(graph: Graph, source: int, sinks) -> float:
    """Exact escape probability via the harmonic hitting system.

    Solves h = P(hit sinks before source) on the source's component and
    returns the one-step average from the source.  Dense; small graphs.
    """
    sinks = np.unique(np.atleast_1d(np.asarray(sinks, dtype=np.int64)))
    if sinks.size == 0:
        raise ValueError("sink set is empty")
    if np.any(sinks == source):
        raise ValueError("source lies in the sink set")
    labels = graph.components()
    if not np.any(labels[sinks] == labels[source]):
        return 0.0
    a = graph.adjacency_csr().toarray()
    in_comp = labels == labels[source]
    unknown = in_comp.copy()
    unknown[sinks] = False
    unknown[source] = False
    h = np.zeros(graph.n)
    h[sinks] = 1.0
    u = np.nonzero(unknown)[0]
    if u.size:
        s = a.sum(axis=1)
        lap = np.diag(s[u]) - a[np.ix_(u, u)]
        rhs = a[np.ix_(u, sinks)].sum(axis=1)
        h[u] = np.linalg.solve(lap, rhs)
    c_src = a[source].sum()
    return float(a[source] @ h / c_src)


def walk_trajectory(
    graph: Graph, start: int, n_steps: int, stream: RngStream
) -> np.ndarray:
    """Vertex sequence of one walk, length n_steps + 1 (dead ends stop it)."""
    if not (0 <= start < graph.n):
        raise ValueError("start vertex out of range")
    indptr, indices, cum, row_base, strengths = _csr_tables(graph)
    rng = stream.generator()
    path = np.empty(n_steps + 1, dtype=np.int64)
    path[0] = start
    v = start
    for t in range(1, n_steps + 1):
        if strengths[v] == 0.0:
            return path[:t]
        r = rng.random()
        target = np.searchsorted(cum, row_base[v] + r * strengths[v], side="right")
        target = min(max(target, indptr[v]), indptr[v + 1] - 1)
        v = int(indices[target])
        path[t] = v
    return path

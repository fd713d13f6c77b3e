"""Connection kernels and edge sampling for the random connection model.

A kernel maps a displacement to a connection probability.  Three families are
supported:

* ``polynomial_tail``: g(x) = 1 - exp(-|x|^(-alpha)), the heavy-tailed kernel
  whose decay exponent alpha controls recurrence versus transience,
* ``truncated``: the same profile cut to zero beyond a finite range M,
* ``blob``: the indicator of a ball of fixed radius (pure geometric graph).

Distances default to the 1-norm.  Given a point cloud, ``sample_edges`` draws
every unordered pair independently with probability g(x_i - x_j); above a
configurable pair budget it switches to a cell-grid sampler with the same
per-pair law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rcm.pointprocess import PointCloud, RngStream

_NORMS = (1.0, 2.0, float("inf"))


@dataclass(frozen=True)
class ConnectionKernel:
    """Isotropic connection probability g as a function of displacement."""

    kind: str
    alpha: float | None = None
    cutoff: float | None = None
    norm: float = 1.0

    def __post_init__(self):
        if self.kind not in ("polynomial_tail", "truncated", "blob"):
            raise ValueError(f"unknown kernel kind: {self.kind!r}")
        if float(self.norm) not in _NORMS:
            raise ValueError("norm must be 1, 2, or inf")
        object.__setattr__(self, "norm", float(self.norm))
        if self.kind == "blob":
            if self.alpha is not None:
                raise ValueError("blob kernel takes no decay exponent")
            if not (self.cutoff is not None and self.cutoff > 0):
                raise ValueError("blob kernel needs a positive radius")
        else:
            if not (self.alpha is not None and self.alpha > 0):
                raise ValueError("decay exponent must be positive")
            object.__setattr__(self, "alpha", float(self.alpha))
        if self.kind == "truncated" and not (
            self.cutoff is not None and self.cutoff > 0
        ):
            raise ValueError("truncated kernel needs a positive range")
        if self.kind == "polynomial_tail" and self.cutoff is not None:
            raise ValueError("polynomial_tail kernel takes no range cutoff")
        if self.cutoff is not None:
            object.__setattr__(self, "cutoff", float(self.cutoff))

    def distance(self, dx: np.ndarray) -> np.ndarray:
        """Norm of displacement rows; dx has shape (..., d)."""
        dx = np.asarray(dx, dtype=float)
        if self.norm == 1.0:
            return np.abs(dx).sum(axis=-1)
        if self.norm == 2.0:
            return np.sqrt((dx * dx).sum(axis=-1))
        return np.abs(dx).max(axis=-1)

    def probability(self, dist) -> np.ndarray:
        """Connection probability at the given (nonnegative) distances."""
        d = np.asarray(dist, dtype=float)
        if np.any(d < 0):
            raise ValueError("distances must be nonnegative")
        if self.kind == "blob":
            return (d <= self.cutoff).astype(float)
        # d == 0 maps to probability 1; the overflow in d**-alpha is benign
        with np.errstate(divide="ignore", over="ignore"):
            p = -np.expm1(-np.power(d, -self.alpha))
        p = np.where(d == 0.0, 1.0, p)
        if self.kind == "truncated":
            p = np.where(d <= self.cutoff, p, 0.0)
        return p

    def of_displacement(self, dx) -> np.ndarray:
        return self.probability(self.distance(dx))

    @property
    def range_bound(self) -> float:
        """Distance beyond which g vanishes identically (inf if none)."""
        return float("inf") if self.kind == "polynomial_tail" else self.cutoff


def polynomial_tail(alpha: float, norm: float = 1.0) -> ConnectionKernel:
    return ConnectionKernel(kind="polynomial_tail", alpha=alpha, norm=norm)


def truncated(alpha: float, cutoff: float, norm: float = 1.0) -> ConnectionKernel:
    return ConnectionKernel(kind="truncated", alpha=alpha, cutoff=cutoff, norm=norm)


def blob(radius: float = 1.0, norm: float = 1.0) -> ConnectionKernel:
    return ConnectionKernel(kind="blob", cutoff=radius, norm=norm)


@dataclass(frozen=True)
class EdgeSample:
    """Edges drawn for one cloud: (m, 2) index pairs with i < j, sorted."""

    edges: np.ndarray
    n_points: int
    pairs_evaluated: int
    method: str

    def __post_init__(self):
        e = np.ascontiguousarray(self.edges, dtype=np.int64).reshape(-1, 2)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]


def sample_edges(
    cloud: PointCloud,
    kernel: ConnectionKernel,
    stream: RngStream,
    pair_budget: int = 50_000_000,
    method: str = "auto",
) -> EdgeSample:
    """Draw each unordered pair independently with probability g(x_i - x_j).

    ``method`` is "dense" (evaluate all n(n-1)/2 pairs), "grid" (cell-grid
    sampler, same per-pair law but a different draw order), or "auto" which
    picks dense up to ``pair_budget`` pairs.  Results are deterministic given
    the stream, separately per method.
    """
    n = len(cloud)
    total_pairs = n * (n - 1) // 2
    if method == "auto":
        method = "dense" if total_pairs <= pair_budget else "grid"
    if method == "dense":
        return _sample_edges_dense(cloud, kernel, stream)
    if method == "grid":
        from rcm.fastedges import sample_edges_grid

        return sample_edges_grid(cloud, kernel, stream)
    raise ValueError(f"unknown sampling method: {method!r}")


def _sample_edges_dense(
    cloud: PointCloud, kernel: ConnectionKernel, stream: RngStream
) -> EdgeSample:
    # One uniform per pair, consumed row by row (i ascending, then j), so the
    # output is a fixed function of the stream.
    pts = cloud.points
    n = len(pts)
    rng = stream.generator()
    src: list[np.ndarray] = []
    dst: list[np.ndarray] = []
    for i in range(n - 1):
        p = kernel.of_displacement(pts[i + 1:] - pts[i])
        u = rng.random(n - 1 - i)
        hit = np.nonzero(u < p)[0]
        if hit.size:
            src.append(np.full(hit.size, i, dtype=np.int64))
            dst.append(hit.astype(np.int64) + i + 1)
    if src:
        edges = np.column_stack([np.concatenate(src), np.concatenate(dst)])
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return EdgeSample(
        edges=edges,
        n_points=n,
        pairs_evaluated=n * (n - 1) // 2,
        method="dense",
    )


def probability_matrix(cloud: PointCloud, kernel: ConnectionKernel) -> np.ndarray:
    """Full (n, n) matrix of pair probabilities, zero diagonal.  Small n only."""
    pts = cloud.points
    p = kernel.of_displacement(pts[None, :, :] - pts[:, None, :])
    np.fill_diagonal(p, 0.0)
    return p

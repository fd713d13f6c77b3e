"""Homogeneous Poisson point process sampling in finite boxes.

Clouds are sampled in axis-aligned boxes, optionally conditioned to carry a
point at the origin (a deterministic extra point prepended at index 0), and
can be bucketed into a uniform cell grid for neighbor queries.  All sampling
is driven by explicit (seed, stream_id) pairs so that every replica is
reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class Region:
    """Axis-aligned box given by corner vectors lo < hi (componentwise)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or len(lo) < 1:
            raise ValueError("lo and hi must be equal-length, nonempty vectors")
        for a, b in zip(lo, hi):
            if not (np.isfinite(a) and np.isfinite(b) and b - a > 0.0):
                raise ValueError(f"degenerate region: lo={lo} hi={hi}")

    @classmethod
    def centered_box(cls, half_width: float, dim: int) -> "Region":
        h = float(half_width)
        if not (h > 0.0 and np.isfinite(h)):
            raise ValueError("half_width must be positive and finite")
        return cls(lo=(-h,) * dim, hi=(h,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def extents(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass(frozen=True)
class RngStream:
    """Named substream of the global randomness.

    Identical (seed, stream_id) pairs yield identical sequences regardless of
    platform or thread schedule; distinct stream_ids are statistically
    independent (numpy SeedSequence spawn keys).
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        """Derive a dependent stream; used for per-block substreams."""
        ss = np.random.SeedSequence(
            self.seed, spawn_key=(self.stream_id, int(index))
        )
        # fold the extended spawn key back into a plain (seed, stream) pair
        digest = ss.generate_state(2, dtype=np.uint64)
        return RngStream(int(digest[0]), int(digest[1]))


def substream(seed: int, label: str, index: int = 0) -> RngStream:
    """Map a root seed plus a module/experiment label and replica index to a
    stream id.  crc32 keeps the mapping stable across runs and platforms."""
    import zlib

    if not (0 <= index < 1 << 32):
        raise ValueError("replica index out of the 32-bit range")
    sid = (zlib.crc32(label.encode()) << 32) | index
    return RngStream(seed=seed, stream_id=sid)


@dataclass(frozen=True)
class Provenance:
    seed: int
    stream_id: int
    rho: float


@dataclass(frozen=True)
class PointCloud:
    """Sampled points in a region, with the sampling parameters attached.

    ``points`` is an (n, d) float array, frozen read-only.  If ``palm_origin``
    is set, row 0 is exactly the zero vector.
    """

    region: Region
    points: np.ndarray
    palm_origin: bool
    provenance: Provenance

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.region.dim:
            raise ValueError("points must be an (n, d) array matching the region")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.palm_origin:
            if len(pts) == 0 or np.any(pts[0] != 0.0):
                raise ValueError("palm cloud must have the origin at index 0")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.region.dim


def sample_poisson(region: Region, rho: float, stream: RngStream) -> PointCloud:
    """Sample a homogeneous Poisson process of intensity rho on the region.

    The count is Poisson(rho * volume); given the count, points are i.i.d.
    uniform.  Deterministic given the stream.
    """
    rho = float(rho)
    if not (rho > 0.0 and np.isfinite(rho)):
        raise ValueError(f"intensity must be positive and finite, got {rho}")
    rng = stream.generator()
    n = rng.poisson(rho * region.volume)
    pts = rng.uniform(low=region.lo, high=region.hi, size=(n, region.dim))
    return PointCloud(
        region=region,
        points=pts,
        palm_origin=False,
        provenance=Provenance(stream.seed, stream.stream_id, rho),
    )


def palm_condition(cloud: PointCloud) -> PointCloud:
    """Prepend the origin point (index 0). Rejects double application."""
    if cloud.palm_origin:
        raise ValueError("cloud is already palm-conditioned")
    origin = np.zeros(cloud.dim)
    if not cloud.region.contains(origin):
        raise ValueError("origin lies outside the cloud region")
    pts = np.vstack([origin[None, :], cloud.points])
    return PointCloud(
        region=cloud.region,
        points=pts,
        palm_origin=True,
        provenance=cloud.provenance,
    )


def lex_sorted(cloud: PointCloud) -> PointCloud:
    """Reorder points lexicographically by coordinate.

    Gives an ordering independent of generation order.  A palm origin stays
    pinned at index 0; only the remaining points are sorted.
    """
    pts = cloud.points
    start = 1 if cloud.palm_origin else 0
    body = pts[start:]
    order = np.lexsort(body.T[::-1])  # primary key = first coordinate
    pts = np.vstack([pts[:start], body[order]]) if start else body[order]
    return PointCloud(
        region=cloud.region,
        points=pts,
        palm_origin=cloud.palm_origin,
        provenance=cloud.provenance,
    )


@dataclass(frozen=True)
class CellGrid:
    """Uniform bucketing of a cloud into half-open cells [lo, lo+s) per axis.

    Points are stored once, ordered by flat cell id; per-cell slices are
    recovered from ``cell_start``.  Cells at the upper region face absorb the
    closed boundary (indices are clamped into range).
    """

    cloud: PointCloud
    cell_size: float
    shape: tuple[int, ...]
    cell_of_point: np.ndarray = field(repr=False)  # (n,) flat cell ids
    order: np.ndarray = field(repr=False)  # point ids sorted by cell
    cell_start: np.ndarray = field(repr=False)  # (ncells+1,) slice bounds

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    def counts(self) -> np.ndarray:
        return np.diff(self.cell_start).reshape(self.shape)

    def cell_index(self, x) -> tuple[int, ...]:
        """Cell multi-index of a coordinate under the half-open convention."""
        x = np.asarray(x, dtype=float)
        idx = np.floor((x - np.asarray(self.cloud.region.lo)) / self.cell_size)
        idx = np.clip(idx, 0, np.asarray(self.shape) - 1).astype(int)
        return tuple(idx)

    def points_in_cell(self, multi_index: tuple[int, ...]) -> np.ndarray:
        flat = int(np.ravel_multi_index(multi_index, self.shape))
        return self.order[self.cell_start[flat]: self.cell_start[flat + 1]]

    def occupied_cells(self) -> Iterator[tuple[tuple[int, ...], np.ndarray]]:
        counts = np.diff(self.cell_start)
        for flat in np.nonzero(counts)[0]:
            multi = np.unravel_index(flat, self.shape)
            yield tuple(int(i) for i in multi), self.order[
                self.cell_start[flat]: self.cell_start[flat + 1]
            ]


def build_cell_grid(cloud: PointCloud, cell_size: float) -> CellGrid:
    """Assign every point to exactly one cell of the given size."""
    cell_size = float(cell_size)
    if not (cell_size > 0.0 and np.isfinite(cell_size)):
        raise ValueError("cell_size must be positive")
    extents = cloud.region.extents
    shape = tuple(int(np.ceil(e / cell_size)) for e in extents)
    lo = np.asarray(cloud.region.lo)
    idx = np.floor((cloud.points - lo) / cell_size).astype(np.int64)
    idx = np.clip(idx, 0, np.asarray(shape) - 1)  # closed upper face
    flat = np.ravel_multi_index(idx.T, shape) if len(cloud) else np.empty(0, np.int64)
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=int(np.prod(shape)))
    cell_start = np.concatenate([[0], np.cumsum(counts)])
    return CellGrid(
        cloud=cloud,
        cell_size=cell_size,
        shape=shape,
        cell_of_point=flat,
        order=order,
        cell_start=cell_start,
    )

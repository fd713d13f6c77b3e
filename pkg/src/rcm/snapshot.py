"""Text snapshots of sampled clouds, edge lists, and lattice configurations.

The format is line oriented and versioned by its leading token.  A cloud
snapshot starts with

    RCM1 d=<d> rho=<rho> seed=<s> stream=<i> lo=<a,b> hi=<a,b> n=<count> palm=<0|1>

followed by one point per line, coordinates space separated with 17
significant digits (which round-trips float64 exactly).  An edge list may
follow:

    EDGES m=<count> kind=<kind> alpha=<a|-> cutoff=<c|-> norm=<p> method=<m>

with one ``i j`` pair per line.  The lattice variant starts with

    LATTICE sx=<sx> sy=<sy> mu=<mu> lam=<lam> alpha=<a> kmax=<k> seed=<s> stream=<i> skipped=<mass>

followed by sx rows of sy characters ('1' open site, '0' closed), a
``BONDS m=<count>`` line, and one flat-index pair per line.  Writing is a
pure function of the data, so identical samples produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rcm.connection import ConnectionKernel, EdgeSample
from rcm.lrp import LatticeSample
from rcm.pointprocess import PointCloud, Provenance, Region


def fmt(x: float) -> str:
    """Shortest-exact decimal for a float64 (17 significant digits)."""
    return "%.17g" % float(x)


def _header(tag: str, fields) -> str:
    return tag + " " + " ".join(f"{k}={v}" for k, v in fields)


def _parse_header(line: str, tag: str) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != tag:
        raise ValueError(f"expected a {tag} header, got {line!r}")
    out = {}
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if not sep or not key:
            raise ValueError(f"malformed header field {part!r}")
        out[key] = value
    return out


@dataclass(frozen=True)
class CloudSnapshot:
    cloud: PointCloud
    edges: np.ndarray | None  # (m, 2) int64 or None when absent
    kernel: ConnectionKernel | None
    method: str | None


def cloud_snapshot_text(
    cloud: PointCloud,
    sample: EdgeSample | None = None,
    kernel: ConnectionKernel | None = None,
) -> str:
    """Serialize a cloud, optionally with one sampled edge list."""
    if (sample is None) != (kernel is None):
        raise ValueError("an edge list and its kernel go together")
    prov = cloud.provenance
    region = cloud.region
    lines = [
        _header(
            "RCM1",
            [
                ("d", cloud.dim),
                ("rho", fmt(prov.rho)),
                ("seed", prov.seed),
                ("stream", prov.stream_id),
                ("lo", ",".join(fmt(v) for v in region.lo)),
                ("hi", ",".join(fmt(v) for v in region.hi)),
                ("n", len(cloud)),
                ("palm", int(cloud.palm_origin)),
            ],
        )
    ]
    for row in cloud.points:
        lines.append(" ".join(fmt(v) for v in row))
    if sample is not None:
        lines.append(
            _header(
                "EDGES",
                [
                    ("m", sample.n_edges),
                    ("kind", kernel.kind),
                    ("alpha", "-" if kernel.alpha is None else fmt(kernel.alpha)),
                    ("cutoff", "-" if kernel.cutoff is None else fmt(kernel.cutoff)),
                    ("norm", fmt(kernel.norm)),
                    ("method", sample.method),
                ],
            )
        )
        for i, j in sample.edges:
            lines.append(f"{i} {j}")
    return "\n".join(lines) + "\n"


def parse_cloud_snapshot(text: str) -> CloudSnapshot:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty snapshot")
    head = _parse_header(lines[0], "RCM1")
    d = int(head["d"])
    n = int(head["n"])
    region = Region(
        lo=tuple(float(v) for v in head["lo"].split(",")),
        hi=tuple(float(v) for v in head["hi"].split(",")),
    )
    if region.dim != d:
        raise ValueError("dimension does not match the window bounds")
    if len(lines) < 1 + n:
        raise ValueError("snapshot is shorter than its declared point count")
    pts = np.empty((n, d))
    for k in range(n):
        vals = lines[1 + k].split()
        if len(vals) != d:
            raise ValueError(f"point line {k} has {len(vals)} coordinates")
        pts[k] = [float(v) for v in vals]
    cloud = PointCloud(
        region=region,
        points=pts,
        palm_origin=bool(int(head["palm"])),
        provenance=Provenance(
            seed=int(head["seed"]),
            stream_id=int(head["stream"]),
            rho=float(head["rho"]),
        ),
    )
    rest = lines[1 + n:]
    if not rest:
        return CloudSnapshot(cloud=cloud, edges=None, kernel=None, method=None)
    ehead = _parse_header(rest[0], "EDGES")
    m = int(ehead["m"])
    if len(rest) != 1 + m:
        raise ValueError("edge block is shorter than its declared count")
    edges = np.empty((m, 2), dtype=np.int64)
    for k in range(m):
        i, j = rest[1 + k].split()
        edges[k] = (int(i), int(j))
    kernel = ConnectionKernel(
        kind=ehead["kind"],
        alpha=None if ehead["alpha"] == "-" else float(ehead["alpha"]),
        cutoff=None if ehead["cutoff"] == "-" else float(ehead["cutoff"]),
        norm=float(ehead["norm"]),
    )
    return CloudSnapshot(
        cloud=cloud, edges=edges, kernel=kernel, method=ehead["method"]
    )


def lattice_snapshot_text(sample: LatticeSample) -> str:
    sx, sy = sample.shape
    lines = [
        _header(
            "LATTICE",
            [
                ("sx", sx),
                ("sy", sy),
                ("mu", fmt(sample.mu)),
                ("lam", fmt(sample.lam)),
                ("alpha", fmt(sample.alpha)),
                ("kmax", sample.k_max),
                ("seed", sample.seed),
                ("stream", sample.stream_id),
                ("skipped", fmt(sample.skipped_mass)),
            ],
        )
    ]
    grid = sample.open_grid()
    for row in grid:
        lines.append("".join("1" if v else "0" for v in row))
    lines.append(f"BONDS m={sample.bonds.shape[0]}")
    for a, b in sample.bonds:
        lines.append(f"{a} {b}")
    return "\n".join(lines) + "\n"


def parse_lattice_snapshot(text: str) -> LatticeSample:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty snapshot")
    head = _parse_header(lines[0], "LATTICE")
    sx, sy = int(head["sx"]), int(head["sy"])
    if len(lines) < 1 + sx + 1:
        raise ValueError("snapshot is shorter than its declared site rows")
    open_sites = np.empty(sx * sy, dtype=bool)
    for r in range(sx):
        row = lines[1 + r]
        if len(row) != sy or set(row) - {"0", "1"}:
            raise ValueError(f"site row {r} is not a {sy}-character bitmap")
        open_sites[r * sy: (r + 1) * sy] = [c == "1" for c in row]
    bonds_head = lines[1 + sx]
    if not bonds_head.startswith("BONDS m="):
        raise ValueError(f"expected a BONDS header, got {bonds_head!r}")
    m = int(bonds_head.split("=", 1)[1])
    rest = lines[2 + sx:]
    if len(rest) != m:
        raise ValueError("bond block is shorter than its declared count")
    bonds = np.empty((m, 2), dtype=np.int64)
    for k in range(m):
        a, b = rest[k].split()
        bonds[k] = (int(a), int(b))
    return LatticeSample(
        shape=(sx, sy),
        mu=float(head["mu"]),
        lam=float(head["lam"]),
        alpha=float(head["alpha"]),
        k_max=int(head["kmax"]),
        open_sites=open_sites,
        bonds=bonds,
        skipped_mass=float(head["skipped"]),
        seed=int(head["seed"]),
        stream_id=int(head["stream"]),
    )

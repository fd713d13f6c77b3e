"""Command line front end for reproducible experiments.

Every subcommand reads a flat key=value config (defaults, then an optional
``--config`` file, then command-line flags, later sources winning), runs one
experiment, and writes plain-text artifacts plus a manifest into ``--out``.
The manifest echoes the fully resolved config and the SHA-256 of every
artifact; ``resolved.cfg`` is the same config in key=value form, so feeding
it back through ``--config`` replays the run byte for byte.  Default
substitutions are logged, never silent.

Exit codes: 0 success, 2 bad configuration (including threshold brackets
that contain no crossing), 3 numerical failure, 4 a statistical self-check
rejected the result (artifacts are still written so the evidence survives).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rcm.connection import (
    ConnectionKernel,
    blob,
    polynomial_tail,
    sample_edges,
    truncated,
)
from rcm.errors import (
    BracketingError,
    CheckFailure,
    ConfigError,
    NumericalError,
)
from rcm.graph import escape_probability, from_edge_sample, largest_component
from rcm.lrp import largest_open_cluster_fraction, sample_lattice
from rcm.percolation import intensity_threshold, percolation_fraction
from rcm.pointprocess import (
    Region,
    RngStream,
    palm_condition,
    sample_poisson,
    substream,
)
from rcm.quadrature import (
    connection_mass,
    mean_degree_prediction,
    pair_region_series,
)
from rcm.recurrence import (
    cutset_scaling_experiment,
    resistance_profile_experiment,
)
from rcm.renormalization import (
    coarse_bond_experiment,
    dominated_lattice_parameters,
    domination_report,
    good_box_experiment,
)
from rcm.snapshot import cloud_snapshot_text, fmt, lattice_snapshot_text
from rcm.walk import escape_frequency


# -- option table ------------------------------------------------------------


@dataclass(frozen=True)
class Opt:
    key: str
    kind: str  # int | float | bool | str | ints | floats
    default: object
    help: str
    flags: tuple[str, ...] = ()  # extra option spellings


def _parse_value(kind: str, raw: str):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes"):
            return True
        if low in ("0", "false", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "ints":
        return tuple(int(v) for v in raw.split(","))
    if kind == "floats":
        return tuple(float(v) for v in raw.split(","))
    return raw


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return fmt(value)
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    return str(value)


KERNEL_OPTS = [
    Opt("kernel", "str", "polynomial_tail",
        "connection kind: polynomial_tail, truncated, or blob"),
    Opt("alpha", "float", 4.0, "kernel decay exponent"),
    Opt("trunc_m", "float", 2.0, "range of the truncated kernel",
        flags=("--trunc-M",)),
    Opt("blob_r", "float", 1.0, "radius of the blob kernel",
        flags=("--blob-R",)),
    Opt("norm", "float", 1.0, "distance norm: 1, 2, or inf"),
]

SEED = Opt("seed", "int", 20260814, "root seed; all streams derive from it")

SPECS: dict[str, list[Opt]] = {
    "sample": KERNEL_OPTS + [
        SEED,
        Opt("d", "int", 2, "dimension"),
        Opt("rho", "float", 1.0, "point intensity"),
        Opt("half_width", "float", 5.0, "window half width"),
        Opt("stream", "int", 0, "stream id of the cloud"),
        Opt("palm", "bool", False, "condition on a point at the origin"),
        Opt("with_edges", "bool", True, "also draw and store the edge list"),
    ],
    "percolate": KERNEL_OPTS + [
        SEED,
        Opt("d", "int", 2, "dimension"),
        Opt("rhos", "floats", (0.5, 1.0, 1.5), "intensity sweep"),
        Opt("half_width", "float", 10.0, "window half width"),
        Opt("replicas", "int", 8, "independent clouds per intensity"),
    ],
    "walk": KERNEL_OPTS + [
        SEED,
        Opt("d", "int", 2, "dimension"),
        Opt("rho", "float", 2.0, "point intensity"),
        Opt("half_width", "float", 10.0, "window half width"),
        Opt("radii", "ints", (4, 8), "escape boundaries"),
        Opt("replicas", "int", 3, "independent clouds"),
        Opt("walks", "int", 20000, "walks per replica and radius"),
        Opt("horizon", "int", 1_000_000, "step cap per walk"),
        Opt("check", "bool", True,
            "fail when frequency and formula disagree beyond 4 sigma"),
    ],
    "resistance-profile": KERNEL_OPTS + [
        SEED,
        Opt("d", "int", 2, "dimension"),
        Opt("rho", "float", 2.0, "point intensity"),
        Opt("radii", "ints", (4, 8, 16, 32), "box radii"),
        Opt("replicas", "int", 8, "independent clouds"),
        Opt("margin", "float", 2.0, "window slack beyond the largest radius"),
        Opt("threshold", "float", 1.0, "projection segment length"),
        Opt("solver", "str", "auto", "resistance solver: auto, dense, or cg"),
    ],
    "cutsets": KERNEL_OPTS + [
        SEED,
        Opt("d", "int", 2, "dimension"),
        Opt("rho", "float", 2.0, "point intensity"),
        Opt("radii", "ints", (8, 16, 32, 64), "cut depths"),
        Opt("replicas", "int", 8, "independent clouds per depth"),
        Opt("margin_factor", "float", 1.5, "window half width over cut depth"),
        Opt("threshold", "float", 1.0, "projection segment length"),
    ],
    "renormalize": KERNEL_OPTS + [
        SEED,
        Opt("d", "int", 2, "dimension"),
        Opt("rho", "float", 60.0, "point intensity"),
        Opt("epsilon", "float", 1.0 / 6.0, "box half width"),
        Opt("beta", "int", 3, "cluster size a good box needs"),
        Opt("index_distances", "ints", (1,), "coarse bond offsets to survey"),
        Opt("half_width", "float", 1.0, "window half width"),
        Opt("replicas", "int", 4, "independent clouds"),
        Opt("p_c", "float", 0.5,
            "nearest-neighbor bond percolation threshold to beat"),
        Opt("check", "bool", True,
            "fail when a bond frequency undercuts its bound"),
    ],
    "lrp": [
        SEED,
        Opt("sx", "int", 40, "lattice rows"),
        Opt("sy", "int", 40, "lattice columns"),
        Opt("mu", "float", 0.7, "site probability"),
        Opt("lam", "float", 1.0, "bond rate"),
        Opt("alpha", "float", 3.0, "bond decay exponent"),
        Opt("k_max", "int", 10, "largest sampled bond distance"),
        Opt("stream", "int", 0, "stream id of the configuration"),
    ],
    "integrals": KERNEL_OPTS + [
        SEED,
        Opt("d", "int", 2, "dimension (pair regions are planar)"),
        Opt("rho", "float", 1.0, "intensity for the mean degree prediction"),
        Opt("geometry", "str", "box_complement",
            "pair region: box_complement or quadrant"),
        Opt("base_truncation", "float", 2.0, "smallest truncation"),
        Opt("levels", "int", 5, "number of doubling truncations"),
    ],
    "threshold": KERNEL_OPTS + [
        SEED,
        Opt("d", "int", 2, "dimension"),
        Opt("target", "float", 0.5, "largest-cluster share to hit"),
        Opt("lo", "float", 0.2, "lower intensity bracket"),
        Opt("hi", "float", 4.0, "upper intensity bracket"),
        Opt("half_width", "float", 10.0, "window half width"),
        Opt("replicas", "int", 6, "clouds per probe"),
        Opt("iterations", "int", 10, "bisection steps"),
    ],
}


# -- config resolution ---------------------------------------------------


def _read_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from e
    out: dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {ln} of {path} is not key=value: {line!r}")
        out[key.strip()] = value.strip()
    return out


def resolve_config(subcommand: str, args) -> tuple[dict, list[str]]:
    """Resolved config and the keys that fell back to defaults."""
    spec = SPECS[subcommand]
    known = {opt.key for opt in spec}
    file_vals = _read_config_file(args.config) if args.config else {}
    unknown = set(file_vals) - known
    if unknown:
        raise ConfigError(
            f"config keys not used by '{subcommand}': {', '.join(sorted(unknown))}"
        )
    cfg: dict = {}
    defaulted: list[str] = []
    for opt in spec:
        raw = getattr(args, opt.key, None)
        if raw is None:
            raw = file_vals.get(opt.key)
        if raw is None:
            cfg[opt.key] = opt.default
            defaulted.append(opt.key)
            continue
        try:
            cfg[opt.key] = _parse_value(opt.kind, raw)
        except ValueError as e:
            raise ConfigError(f"bad value for {opt.key}: {e}") from e
    return cfg, defaulted


def _build_kernel(cfg) -> ConnectionKernel:
    kind = cfg["kernel"]
    try:
        if kind == "polynomial_tail":
            return polynomial_tail(cfg["alpha"], norm=cfg["norm"])
        if kind == "truncated":
            return truncated(cfg["alpha"], cutoff=cfg["trunc_m"], norm=cfg["norm"])
        if kind == "blob":
            return blob(radius=cfg["blob_r"], norm=cfg["norm"])
    except ValueError as e:
        raise ConfigError(str(e)) from e
    raise ConfigError(f"unknown kernel kind {kind!r}")


# -- artifact helpers ------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(float(v))
    return str(v)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _alpha_of(kernel: ConnectionKernel) -> float:
    return float("nan") if kernel.alpha is None else kernel.alpha


def _palm_graph_in_big_cluster(kernel, cfg, label, replica):
    """Palm cloud whose origin lies in the largest cluster, or None.

    Resampling uses attempt-indexed substreams; the number of extra draws is
    returned alongside the graph.
    """
    window = Region.centered_box(cfg["half_width"], cfg["d"])
    resamples = 0
    for attempt in range(100):
        idx = 128 * replica + attempt
        cloud = palm_condition(
            sample_poisson(
                window, cfg["rho"], substream(cfg["seed"], f"{label}-points", idx)
            )
        )
        sample = sample_edges(
            cloud, kernel, substream(cfg["seed"], f"{label}-edges", idx)
        )
        g = from_edge_sample(cloud, sample)
        _, members = largest_component(g.components())
        if members.size and members[0] == 0:
            return g, resamples
        resamples += 1
    return None, resamples


# -- subcommand handlers ---------------------------------------------------


def _run_sample(cfg):
    kernel = _build_kernel(cfg)
    region = Region.centered_box(cfg["half_width"], cfg["d"])
    cloud = sample_poisson(region, cfg["rho"], RngStream(cfg["seed"], cfg["stream"]))
    if cfg["palm"]:
        cloud = palm_condition(cloud)
    if cfg["with_edges"]:
        sample = sample_edges(
            cloud, kernel, substream(cfg["seed"], "sample-edges", cfg["stream"])
        )
        text = cloud_snapshot_text(cloud, sample, kernel)
        log = [f"sampled {len(cloud)} points, {sample.n_edges} edges"]
    else:
        text = cloud_snapshot_text(cloud)
        log = [f"sampled {len(cloud)} points"]
    return {"snapshot.rcm1": text}, log, []


def _run_percolate(cfg):
    kernel = _build_kernel(cfg)
    rows = []
    summary = []
    for i, rho in enumerate(cfg["rhos"]):
        rep = percolation_fraction(
            kernel, rho, cfg["half_width"], cfg["replicas"], cfg["seed"],
            dim=cfg["d"], label=f"percolate{i}",
        )
        for r in range(cfg["replicas"]):
            rows.append(
                (rho, r, rep.n_points[r], rep.n_edges[r],
                 rep.fractions[r], rep.degrees[r])
            )
        summary.append(
            {"rho": rho, "mean_fraction": rep.mean_fraction, "se": rep.se,
             "mean_points": rep.mean_points, "mean_degree": rep.mean_degree}
        )
    csv = _csv(
        ("rho", "replica", "n_points", "n_edges", "largest_fraction",
         "mean_degree"),
        rows,
    )
    log = [f"rho={s['rho']:g}: fraction={s['mean_fraction']:.4f}" for s in summary]
    return (
        {"cluster_stats.csv": csv, "summary.json": _json_text({"sweep": summary})},
        log,
        [],
    )


def _run_walk(cfg):
    kernel = _build_kernel(cfg)
    radii = cfg["radii"]
    if max(radii) >= cfg["half_width"]:
        raise ConfigError("largest radius must sit inside the window")
    rows = []
    failures = []
    total_resamples = 0
    dropped = 0
    for r in range(cfg["replicas"]):
        g, resamples = _palm_graph_in_big_cluster(kernel, cfg, "walk", r)
        total_resamples += resamples
        if g is None:
            dropped += 1
            for n in radii:
                rows.append(
                    (cfg["d"], _alpha_of(kernel), cfg["rho"], n, r,
                     cfg["walks"], float("nan"), float("nan"), float("nan"), 1)
                )
            continue
        depth = np.abs(g.points).max(axis=1)
        for n in radii:
            sinks = np.nonzero(depth > n)[0]
            if sinks.size == 0:
                raise ConfigError(
                    f"no vertices beyond radius {n}; enlarge the window"
                )
            predicted = escape_probability(g, 0, sinks)
            est = escape_frequency(
                g, 0, sinks, cfg["walks"],
                substream(cfg["seed"], f"walk-run-{n}", r),
                max_steps=cfg["horizon"],
            )
            sigma = math.sqrt(max(predicted * (1.0 - predicted), 0.0) / cfg["walks"])
            rows.append(
                (cfg["d"], _alpha_of(kernel), cfg["rho"], n, r, cfg["walks"],
                 est.frequency, predicted, sigma, 0)
            )
            if cfg["check"] and abs(est.frequency - predicted) > 4.0 * sigma:
                failures.append(
                    f"replica {r} radius {n}: frequency {est.frequency:.5f} "
                    f"vs formula {predicted:.5f} exceeds 4 sigma"
                )
    csv = _csv(
        ("d", "alpha", "rho", "n", "replica", "walks", "frequency",
         "predicted", "sigma", "dropped_flag"),
        rows,
    )
    summary = {
        "replicas": cfg["replicas"],
        "dropped": dropped,
        "resamples": total_resamples,
        "violations": len(failures),
    }
    log = [f"walk rows: {len(rows)}, dropped replicas: {dropped}"]
    return {"walk.csv": csv, "summary.json": _json_text(summary)}, log, failures


def _run_resistance_profile(cfg):
    kernel = _build_kernel(cfg)
    rep = resistance_profile_experiment(
        kernel, cfg["rho"], cfg["radii"], cfg["replicas"], cfg["seed"],
        margin=cfg["margin"], dim=cfg["d"], threshold=cfg["threshold"],
        method=cfg["solver"],
    )
    rows = []
    ki = 0
    for r in range(cfg["replicas"]):
        if rep.kept[r]:
            for k, n in enumerate(rep.radii):
                rows.append(
                    (cfg["d"], _alpha_of(kernel), cfg["rho"], n, r,
                     rep.profiles[ki, k], rep.residuals[ki, k], 0)
                )
            ki += 1
        else:
            for n in rep.radii:
                rows.append(
                    (cfg["d"], _alpha_of(kernel), cfg["rho"], n, r,
                     float("nan"), float("nan"), 1)
                )
    csv = _csv(
        ("d", "alpha", "rho", "n", "replica", "R_eff", "resid", "dropped_flag"),
        rows,
    )
    summary = {
        "radii": rep.radii,
        "replicas_kept": rep.replicas_kept,
        "resamples": rep.resamples,
        "mean_profile": rep.mean_profile,
        "slope_vs_log_radius": rep.slope_vs_log_radius,
        "intercept": rep.intercept,
        "r2": rep.r2,
        "increments": rep.increments,
        "increments_decreasing": rep.increments_decreasing,
    }
    log = [
        f"kept {rep.replicas_kept}/{cfg['replicas']} replicas, "
        f"slope vs log n = {rep.slope_vs_log_radius:.4f} (r2 {rep.r2:.3f})"
    ]
    return (
        {"resistance_profile.csv": csv, "summary.json": _json_text(summary)},
        log,
        [],
    )


def _run_cutsets(cfg):
    kernel = _build_kernel(cfg)
    if kernel.alpha is not None and kernel.alpha <= cfg["d"]:
        raise ConfigError(
            "decay exponent must exceed the dimension for cut-set scaling"
        )
    rep = cutset_scaling_experiment(
        kernel, cfg["rho"], cfg["radii"], cfg["replicas"], cfg["seed"],
        margin_factor=cfg["margin_factor"], dim=cfg["d"],
        threshold=cfg["threshold"],
    )
    rows = []
    for k, n in enumerate(rep.radii):
        scale = n * math.log(n)
        for r in range(cfg["replicas"]):
            rows.append(
                (_alpha_of(kernel), cfg["rho"], n, r,
                 rep.normalized[r, k] * scale, rep.normalized[r, k])
            )
    csv = _csv(("alpha", "rho", "n", "replica", "C_n", "C_n_over_nlogn"), rows)
    mean_cuts = rep.normalized.mean(axis=0) * np.array(
        [n * math.log(n) for n in rep.radii]
    )
    summary = {
        "radii": rep.radii,
        "q90": rep.q90,
        "q90_lo": rep.q90_lo,
        "q90_hi": rep.q90_hi,
        "nonincreasing": rep.nonincreasing,
        "nondecreasing": rep.nondecreasing,
        "tail_exponent_last": rep.tail_exponent_last,
        # plug-in partial sum of reciprocal mean cut conductances; a
        # conservative stand-in for the resistance lower bound
        "nash_williams_sum": float(np.sum(1.0 / mean_cuts)),
    }
    log = [
        "q90 of C/(n log n): "
        + ", ".join(f"{n}:{q:.3f}" for n, q in zip(rep.radii, rep.q90))
    ]
    return {"cutsets.csv": csv, "summary.json": _json_text(summary)}, log, []


def _run_renormalize(cfg):
    kernel = _build_kernel(cfg)
    site = good_box_experiment(
        kernel, cfg["rho"], cfg["epsilon"], cfg["beta"], cfg["half_width"],
        cfg["replicas"], cfg["seed"], dim=cfg["d"],
    )
    rows = []
    bonds = []
    failures = []
    for k in cfg["index_distances"]:
        rep = coarse_bond_experiment(
            kernel, cfg["rho"], cfg["epsilon"], cfg["beta"], k,
            cfg["half_width"], cfg["replicas"], cfg["seed"], dim=cfg["d"],
        )
        bonds.append(rep)
        for _, box_a, box_b, is_open in rep.pairs:
            rows.append(
                (cfg["epsilon"], cfg["beta"], cfg["rho"], box_a, box_b, k,
                 1, is_open)
            )
        if cfg["check"] and not rep.satisfies_bound:
            failures.append(
                f"offset {k}: frequency {rep.frequency:.4f} undercuts "
                f"bound {rep.bound:.4f} beyond 4 sigma"
            )
    mu, lam = dominated_lattice_parameters(site, bonds, cfg["alpha"])
    report = {
        "site": {
            "n_boxes": site.n_boxes, "n_good": site.n_good,
            "fraction": site.fraction, "se": site.se,
        },
        "bonds": [
            {"index_distance": b.index_distance, "n_good_pairs": b.n_good_pairs,
             "frequency": b.frequency, "bound": b.bound, "se": b.se,
             "satisfies_bound": b.satisfies_bound}
            for b in bonds
        ],
        "dominated_mu": mu,
        "dominated_lambda": lam,
        "lattice_alpha": cfg["alpha"],
    }
    if any(b.index_distance == 1 for b in bonds):
        nn = domination_report(site, bonds, "nearest_neighbor", p_c=cfg["p_c"])
        c = nn.comparisons[0]
        report["nearest_neighbor"] = {
            "product": c.estimate, "p_c": c.reference,
            "interval": [c.lo, c.hi], "passed": c.passed,
        }
    csv = _csv(
        ("epsilon", "beta", "rho", "box_i", "box_j", "k", "both_good",
         "bond_open"),
        rows,
    )
    log = [
        f"good boxes: {site.n_good}/{site.n_boxes} ({site.fraction:.3f}), "
        f"dominated mu={mu:.3f} lambda={lam:.3f}"
    ]
    return (
        {"coarse.csv": csv, "domination.json": _json_text(report)},
        log,
        failures,
    )


def _run_lrp(cfg):
    sample = sample_lattice(
        (cfg["sx"], cfg["sy"]), cfg["mu"], cfg["lam"], cfg["alpha"],
        cfg["k_max"], RngStream(cfg["seed"], cfg["stream"]),
    )
    summary = {
        "n_sites": sample.n_sites,
        "n_open": sample.n_open,
        "n_bonds": int(sample.bonds.shape[0]),
        "skipped_mass": sample.skipped_mass,
        "largest_open_cluster_fraction": largest_open_cluster_fraction(sample),
    }
    log = [
        f"lattice {cfg['sx']}x{cfg['sy']}: {sample.n_open} open sites, "
        f"{sample.bonds.shape[0]} bonds"
    ]
    return (
        {"lattice.rcm1": lattice_snapshot_text(sample),
         "summary.json": _json_text(summary)},
        log,
        [],
    )


def _run_integrals(cfg):
    kernel = _build_kernel(cfg)
    if cfg["d"] != 2:
        raise ConfigError("pair-region integrals are planar; set d=2")
    mass = connection_mass(kernel, dim=cfg["d"])
    degree = mean_degree_prediction(cfg["rho"], kernel, dim=cfg["d"])
    series = pair_region_series(
        kernel, cfg["geometry"], base_truncation=cfg["base_truncation"],
        levels=cfg["levels"],
    )
    rows = []
    for k, (t, v) in enumerate(zip(series.truncations, series.values)):
        diff = series.diffs[k - 1] if k >= 1 else float("nan")
        ratio = series.ratios[k - 2] if k >= 2 else float("nan")
        rows.append((k, t, v, diff, ratio))
    csv = _csv(("level", "truncation", "value", "diff", "ratio"), rows)
    report = {
        "connection_mass": mass,
        "mean_degree": degree,
        "geometry": series.config,
        "converged": series.converged,
        "limit_estimate": series.limit_estimate,
        "truncations": series.truncations,
        "values": series.values,
    }
    log = [
        f"kernel mass {mass:.6f}, series "
        + ("converged" if series.converged else "did not converge")
    ]
    return (
        {"series.csv": csv, "integrals.json": _json_text(report)},
        log,
        [],
    )


def _run_threshold(cfg):
    kernel = _build_kernel(cfg)
    res = intensity_threshold(
        kernel, cfg["target"], cfg["lo"], cfg["hi"], cfg["half_width"],
        cfg["replicas"], cfg["seed"], iterations=cfg["iterations"],
        dim=cfg["d"],
    )
    report = {
        "target": res.target,
        "lo": res.lo,
        "hi": res.hi,
        "estimate": res.estimate,
        "status": res.status,
        "probes": [{"rho": p[0], "fraction": p[1]} for p in res.probes],
    }
    log = [f"threshold estimate {res.estimate:.4f} ({res.status})"]
    return {"threshold.json": _json_text(report)}, log, []


HANDLERS = {
    "sample": _run_sample,
    "percolate": _run_percolate,
    "walk": _run_walk,
    "resistance-profile": _run_resistance_profile,
    "cutsets": _run_cutsets,
    "renormalize": _run_renormalize,
    "lrp": _run_lrp,
    "integrals": _run_integrals,
    "threshold": _run_threshold,
}


# -- driver ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcm",
        description="simulation and verification experiments on the random "
        "connection model",
    )
    subs = parser.add_subparsers(dest="subcommand")
    for name, spec in SPECS.items():
        sp = subs.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", default=None,
                        help="key=value file; flags override it")
        sp.add_argument("--out", default="out", help="output directory")
        for opt in spec:
            names = (f"--{opt.key.replace('_', '-')}",) + opt.flags
            sp.add_argument(*names, dest=opt.key, default=None, help=opt.help)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_help()
        return 2
    try:
        cfg, defaulted = resolve_config(args.subcommand, args)
        for key in defaulted:
            print(f"default: {key}={_format_value(cfg[key])}")
        artifacts, log, failures = HANDLERS[args.subcommand](cfg)
        artifacts = dict(artifacts)
        artifacts["resolved.cfg"] = "".join(
            f"{k}={_format_value(cfg[k])}\n" for k in sorted(cfg)
        )
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        hashes = {}
        for name in sorted(artifacts):
            data = artifacts[name].encode()
            (outdir / name).write_bytes(data)
            hashes[name] = hashlib.sha256(data).hexdigest()
        manifest = {
            "format": "rcm-manifest-1",
            "subcommand": args.subcommand,
            "config": {k: _format_value(v) for k, v in sorted(cfg.items())},
            "artifacts": hashes,
        }
        (outdir / "manifest.json").write_text(_json_text(manifest))
    except (ConfigError, BracketingError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except CheckFailure as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 4
    for line in log:
        print(line)
    for name in sorted(artifacts):
        print(f"wrote {outdir / name}")
    print(f"wrote {outdir / 'manifest.json'}")
    if failures:
        for f in failures:
            print(f"check failed: {f}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Random connection model toolkit.

Samples continuum percolation graphs over Poisson point clouds, runs random
walk and effective-resistance experiments on them, and provides the coarse
graining and lattice comparison machinery used to probe recurrence versus
transience numerically.
"""

from rcm.connection import (
    ConnectionKernel,
    EdgeSample,
    blob,
    polynomial_tail,
    sample_edges,
    truncated,
)
from rcm.graph import (
    DegreeStats,
    Graph,
    ResistanceResult,
    connected_components,
    degree_stats,
    effective_resistance,
    escape_probability,
    from_edge_sample,
    largest_cluster_fraction,
    largest_component,
)
from rcm.lrp import lattice_graph, largest_open_cluster_fraction, sample_lattice
from rcm.percolation import intensity_threshold, percolation_fraction
from rcm.pointprocess import (
    CellGrid,
    PointCloud,
    Region,
    RngStream,
    build_cell_grid,
    palm_condition,
    sample_poisson,
    substream,
)
from rcm.quadrature import (
    connection_mass,
    integrate2d,
    mean_degree_prediction,
    pair_region_integral,
    pair_region_series,
)
from rcm.recurrence import (
    boundary_cuts,
    cut_lower_bound,
    cutset_scaling_experiment,
    project_long_edges,
    resistance_profile_experiment,
)
from rcm.renormalization import (
    analyze_boxes,
    coarse_bond_experiment,
    coarse_bonds,
    dominated_lattice_parameters,
    domination_report,
    good_box_experiment,
)
from rcm.walk import escape_frequency, walk_trajectory

__all__ = [
    "CellGrid",
    "ConnectionKernel",
    "DegreeStats",
    "EdgeSample",
    "Graph",
    "PointCloud",
    "Region",
    "ResistanceResult",
    "RngStream",
    "analyze_boxes",
    "blob",
    "boundary_cuts",
    "build_cell_grid",
    "coarse_bond_experiment",
    "coarse_bonds",
    "connected_components",
    "connection_mass",
    "cut_lower_bound",
    "cutset_scaling_experiment",
    "degree_stats",
    "dominated_lattice_parameters",
    "domination_report",
    "effective_resistance",
    "escape_frequency",
    "escape_probability",
    "from_edge_sample",
    "good_box_experiment",
    "integrate2d",
    "intensity_threshold",
    "largest_cluster_fraction",
    "largest_component",
    "largest_open_cluster_fraction",
    "lattice_graph",
    "mean_degree_prediction",
    "pair_region_integral",
    "pair_region_series",
    "palm_condition",
    "percolation_fraction",
    "polynomial_tail",
    "project_long_edges",
    "resistance_profile_experiment",
    "sample_edges",
    "sample_lattice",
    "sample_poisson",
    "substream",
    "truncated",
    "walk_trajectory",
]

__version__ = "0.1.0"

"""Exact determinantal measures on finite CW-complexes."""

from .complex_core import (
    CellRef,
    ChainComplex,
    RegionSelection,
    box_region,
    build_cubical_torus,
    build_graph,
    build_simplex_skeleton,
    bundled_complex,
    dual_torus_map,
    interior_and_boundary,
    load_complex,
    restrict_to_cells,
    save_complex,
)
from .linalg import ProjectionKernel, TorsionReport, smith_normal_form
from .measures import (
    MatroidalMeasure,
    betti_gap,
    dual_complement_kernel,
    inclusion_probability,
    matroidal_kernel,
    subset_probability,
)

__version__ = "0.1.0"

__all__ = [
    "CellRef",
    "ChainComplex",
    "RegionSelection",
    "ProjectionKernel",
    "TorsionReport",
    "MatroidalMeasure",
    "box_region",
    "build_cubical_torus",
    "build_graph",
    "build_simplex_skeleton",
    "bundled_complex",
    "dual_torus_map",
    "interior_and_boundary",
    "load_complex",
    "restrict_to_cells",
    "save_complex",
    "smith_normal_form",
    "matroidal_kernel",
    "inclusion_probability",
    "subset_probability",
    "betti_gap",
    "dual_complement_kernel",
]

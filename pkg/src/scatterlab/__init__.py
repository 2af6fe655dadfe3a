"""Scattering diagrams in the tropical vertex group.

Exact truncated series and Lie algebra elements, consistent completion of
two-wall diagrams, the tree-sum solver with Gaussian cone measures, and a
finite-hbar numerics lab.
"""

from .kernels import BACKEND
from .lattice_algebra import Q, TruncatedSeries, series_exp, series_inv, series_log
from .mc_solver import assemble_wall_factors, enumerate_trees, gaussian_cone_measure, verify_against_ks
from .scattering_core import (
    LINE,
    RAY,
    Diagram,
    InconsistencyError,
    Wall,
    is_consistent,
    ks_complete,
    loop_product,
    standard_inputs,
)
from .tropical_vertex import GroupElement, LieElement, apply_automorphism, bch, bracket

__all__ = [
    "BACKEND",
    "Q",
    "TruncatedSeries",
    "series_exp",
    "series_log",
    "series_inv",
    "LieElement",
    "GroupElement",
    "bracket",
    "bch",
    "apply_automorphism",
    "LINE",
    "RAY",
    "Wall",
    "Diagram",
    "InconsistencyError",
    "ks_complete",
    "is_consistent",
    "loop_product",
    "standard_inputs",
    "enumerate_trees",
    "gaussian_cone_measure",
    "assemble_wall_factors",
    "verify_against_ks",
]
__version__ = "0.1.0"

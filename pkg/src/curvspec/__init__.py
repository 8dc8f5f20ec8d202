"""Spectra of natural Schrodinger operators on immersed surfaces.

The operator ``L = -Laplacian - (alpha |h|^2 + beta |H|^2)`` is built from the
second fundamental form of a surface immersed in a space form, discretized
with P1 finite elements and checked against closed-form eigenvalue bounds.
"""
from .catalog import CATALOG, CatalogEntry, catalog, rescale
from .eigensolve import (ExtrapolatedValue, LevelSpectra, SpectrumResult, extrapolate,
                         richardson, solve_dense, solve_lowest)
from .errors import *  # noqa: F401,F403
from .geometry import (AmbientSpace, Immersion, gauss_equation_residual, integrate,
                       point_geometry, pullback_metric)
from .mesh import SurfaceMesh, euler_genus, mesh_geometry, mesh_surface
from .operator import AssembledOperator, assemble, export_matrix_market, rayleigh
from .theorems import (BifurcationResult, ConformalAreaBounds, InequalityReport,
                       SphereReference, bifurcation_alpha, corollary_bounds,
                       identity_checks, lambda1_bound, lambda2_gap, verify_inequality,
                       veronese_check)

__version__ = "0.1.0"

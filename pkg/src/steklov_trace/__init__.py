"""Harmonic and biharmonic Steklov spectra on planar domains and the trace spaces they describe.

Boundary data are expanded in the normalized Steklov traces of a chosen
problem; weighted sums of the coefficients give trace norms, the extension
operator and spectral compatibility tests for Dirichlet/Neumann pairs.
Quadrature oracles for Gagliardo and Besov seminorms and Weyl-law fits
cross-check the spectral side.
"""

from .asymptotics import WeylFit, sequence_view, weyl_constant_laplace, weyl_fit
from .besov_oracle import SeminormEstimate, besov_diff_seminorm, gagliardo_seminorm
from .compatibility import (CompatibilityReport, GeymonatReport, PairCheck, TracePair,
                            VertexReport, check_pair, geymonat_check, residual, vertex_compat_p2)
from .disk_spectral import (DiskModeSpace, KernelReport, biharmonic_steklov_disk, disk_auxiliary,
                            laplace_steklov_disk, polynomial_kernel_check)
from .errors import InvalidArgument, InvariantViolation, SPDViolation
from .fem import assemble, assemble_auxiliary, convergence_study, solve, solve_auxiliary
from .geometry import (BoundaryParam, BoundarySamples, DiskDomain, Mesh2D, build_disk,
                       build_polygon_disk_mesh, build_rect_mesh, mesh_boundary_param, polygon_param)
from .spectrum import AuxiliaryProblemSpec, Spectrum, SteklovProblemSpec
from .trace_spaces import (MembershipVerdict, TraceCoefficients, WeightScheme, boundary_expand,
                           classify_membership, classify_terms, extend, hadamard_coefficients,
                           reconstruct_field, steklov_expand, synthesize, trace_of, weighted_norm)

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryProblemSpec", "BoundaryParam", "BoundarySamples", "CompatibilityReport",
    "DiskDomain", "DiskModeSpace", "GeymonatReport", "InvalidArgument", "InvariantViolation",
    "KernelReport", "MembershipVerdict", "Mesh2D", "PairCheck", "SPDViolation", "SeminormEstimate",
    "Spectrum", "SteklovProblemSpec", "TraceCoefficients", "TracePair", "VertexReport",
    "WeightScheme", "WeylFit", "assemble", "assemble_auxiliary", "besov_diff_seminorm",
    "biharmonic_steklov_disk", "boundary_expand", "build_disk", "build_polygon_disk_mesh",
    "build_rect_mesh", "check_pair", "classify_membership", "classify_terms", "convergence_study",
    "disk_auxiliary", "extend", "gagliardo_seminorm", "geymonat_check", "hadamard_coefficients",
    "laplace_steklov_disk", "mesh_boundary_param", "polygon_param", "polynomial_kernel_check",
    "reconstruct_field", "residual", "sequence_view", "solve", "solve_auxiliary",
    "steklov_expand", "synthesize", "trace_of", "vertex_compat_p2", "weighted_norm",
    "weyl_constant_laplace", "weyl_fit",
]

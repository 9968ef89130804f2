"""Finite elements for the Steklov family with k = 1 (P1) and k = 2 (Hermite)."""

from .assembly import AssembledForms, FESpace, assemble, assemble_auxiliary, boundary_form, volume_form
from .solver import (ConvergenceTable, ReducedEigenproblem, convergence_study, reduce, solve,
                     solve_auxiliary, solve_reduced)

__all__ = [
    "AssembledForms", "ConvergenceTable", "FESpace", "ReducedEigenproblem", "assemble",
    "assemble_auxiliary", "boundary_form", "convergence_study", "reduce", "solve",
    "solve_auxiliary", "solve_reduced", "volume_form",
]

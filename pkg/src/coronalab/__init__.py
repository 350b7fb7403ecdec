"""Numerical laboratory for the matrix-valued Hp corona problem.

Solves ``F f = g`` with analytic ``f`` on the disk and polydisk by
block-Toeplitz least-norm solving, and verifies the explicit formulas,
embedding inequalities and norm bounds that the solution theory rests
on, at desk scale.
"""

from .matpoly import AntiPoly, MatPoly, hstack
from .pointwise import (
    CoronaInstance,
    GramSingularError,
    IdentityResidualReport,
    check_identities,
    check_identities_grid,
    delta_range,
    gram,
    phi_map,
    pi_map,
)

__all__ = [
    "AntiPoly",
    "MatPoly",
    "hstack",
    "CoronaInstance",
    "GramSingularError",
    "IdentityResidualReport",
    "check_identities",
    "check_identities_grid",
    "delta_range",
    "gram",
    "phi_map",
    "pi_map",
]

__version__ = "0.1.0"

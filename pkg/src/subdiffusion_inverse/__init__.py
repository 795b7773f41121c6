"""Spectral solvers for the subdiffusion equation with a non-local time condition.

    D_t^rho u + A u = f,    u(xi0) = alpha u(0) + phi,

with forward solution, recovery of a time-independent source from
``u(xi1) = V`` and recovery of ``phi`` from ``u(xi2) = W``.
"""

from __future__ import annotations

from .errors import (
    BadGeometry,
    DegenerateDenominator,
    NearCriticalDenominator,
    OrthogonalityViolation,
    SolverError,
    UnderflowGuard,
)
from .forward import SourceTerm, SpectralSolution, TimeGrid, classical_limit, eval_solution, omega, solve_forward
from .inverse_nonlocal import (
    BackwardReport,
    PhiRecoveryInput,
    backward_limit_check,
    recover_phi,
    source_regularity,
)
from .inverse_source import (
    SourceRecoveryInput,
    find_degenerate_alpha,
    margin_scale,
    recover_source,
    uniqueness_margin,
)
from .mittag_leffler import MLParams, mittag_leffler, ml, ml_a, ml_b, ml_kernel
from .residual import ResidualReport, caputo_l1, equation_residual, verify
from .spectral import (
    CriticalSet,
    DirichletBasis,
    FractionalModel,
    SpectralVector,
    Spectrum,
    check_orthogonality,
    critical_set,
    dirichlet_spectrum,
    fourier_coeffs,
    from_document,
    sobolev_norm,
    synthesize,
    to_document,
)

__all__ = [
    "BackwardReport", "BadGeometry", "CriticalSet", "DegenerateDenominator", "DirichletBasis",
    "FractionalModel", "MLParams", "NearCriticalDenominator", "OrthogonalityViolation",
    "PhiRecoveryInput", "ResidualReport", "SolverError", "SourceRecoveryInput", "SourceTerm",
    "SpectralSolution", "SpectralVector", "Spectrum", "TimeGrid", "UnderflowGuard",
    "backward_limit_check", "caputo_l1", "check_orthogonality", "classical_limit", "critical_set",
    "dirichlet_spectrum", "equation_residual", "eval_solution", "find_degenerate_alpha",
    "fourier_coeffs", "from_document", "margin_scale", "mittag_leffler", "ml", "ml_a", "ml_b",
    "ml_kernel", "omega", "recover_phi", "recover_source", "sobolev_norm", "solve_forward",
    "source_regularity", "synthesize", "to_document", "uniqueness_margin", "verify",
]

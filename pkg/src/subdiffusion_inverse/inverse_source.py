"""Recovery of a time-independent source from ``u(xi1) = V``.

With ``a(t) = t^rho E_{rho,rho+1}(-lambda t^rho)`` and ``b(t) = E_rho(-lambda t^rho)``
the source coefficient of a non-critical mode solves

    f_k D_k = (alpha - b(xi0)) V_k + b(xi1) phi_k,
    D_k = b(xi1) a(xi0) + a(xi1) (alpha - b(xi0)).

``D_k > 0`` whenever ``xi1 < xi0`` and ``alpha`` is in (0, 1). Critical modes
carry no source and their free amplitude is pinned by ``V_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadGeometry, DegenerateDenominator, OrthogonalityViolation, UnderflowGuard
from .forward import DEFAULT_PANELS, SourceTerm, SpectralSolution
from .mittag_leffler import ml_a, ml_b
from .spectral import (
    FractionalModel,
    SpectralVector,
    Spectrum,
    check_orthogonality,
    critical_set,
)


@dataclass(frozen=True)
class SourceRecoveryInput:
    model: FractionalModel
    xi1: float
    phi: SpectralVector
    V: SpectralVector


def _ab(model: FractionalModel, lam, t):
    return np.asarray(ml_a(model.rho, lam, t)), np.asarray(ml_b(model.rho, lam, t))


def uniqueness_margin(model: FractionalModel, lam, xi1: float):
    """Denominator ``D(lambda) = b(xi1) a(xi0) + a(xi1) (alpha - b(xi0))``."""
    a0, b0 = _ab(model, lam, model.xi0)
    a1, b1 = _ab(model, lam, xi1)
    d = b1 * a0 + a1 * (model.alpha - b0)
    return float(d) if np.ndim(d) == 0 else d


def margin_scale(model: FractionalModel, lam, xi1: float):
    """Magnitude of the two terms of ``D``; the degeneracy floor is relative to it."""
    a0, b0 = _ab(model, lam, model.xi0)
    a1, b1 = _ab(model, lam, xi1)
    return np.abs(b1 * a0) + np.abs(a1 * (model.alpha - b0))


def find_degenerate_alpha(model: FractionalModel, lam: float, xi1: float):
    """The ``alpha`` in (0, 1) at which ``D(lambda)`` vanishes, or ``None``.

    Only the model's ``rho`` and ``xi0`` are used. For ``xi1 > xi0`` the root
    ``alpha* = b(xi0) - a(xi0) b(xi1) / a(xi1)`` always lies below ``b(xi0)``.
    """
    if xi1 < model.xi0:
        raise ValueError("degenerate alpha is only sought for xi1 >= xi0")
    a0, b0 = _ab(model, lam, model.xi0)
    a1, b1 = _ab(model, lam, xi1)
    alpha = float((a1 * b0 - a0 * b1) / a1)
    if 0.0 < alpha < 1.0:
        return alpha
    return None


def recover_source(
    inp: SourceRecoveryInput,
    spectrum: Spectrum,
    *,
    eps_crit: float = 1e-9,
    eps_den: float = 1e-10,
    orth_tol: float = 1e-12,
    allow_any_geometry: bool = False,
    panels: int = DEFAULT_PANELS,
) -> tuple[SpectralVector, SpectralSolution]:
    """Recover ``(f, u)`` from ``phi`` and ``V = u(xi1)``.

    ``xi1 >= xi0`` raises :class:`BadGeometry` unless ``allow_any_geometry`` is
    set, in which case vanishing denominators raise :class:`DegenerateDenominator`.
    """
    model, xi1 = inp.model, float(inp.xi1)
    n = len(spectrum)
    if len(inp.phi) != n or len(inp.V) != n:
        raise ValueError("phi, V and the spectrum must have the same number of modes")
    if not (0.0 < xi1 <= model.T):
        raise BadGeometry(f"xi1={xi1} must lie in (0, T]")
    if xi1 >= model.xi0 and not allow_any_geometry:
        raise BadGeometry(f"source recovery needs 0 < xi1 < xi0 (xi1={xi1}, xi0={model.xi0})")

    critical = critical_set(model, spectrum, eps_crit)
    ok, bad = check_orthogonality(inp.phi, critical, orth_tol)
    if not ok:
        raise OrthogonalityViolation(bad, "phi")

    lam = spectrum.eigenvalues
    a0, b0 = _ab(model, lam, model.xi0)
    a1, b1 = _ab(model, lam, xi1)
    if np.any(b1 < np.finfo(float).tiny):
        raise UnderflowGuard(f"E_rho(-lambda xi1^rho) underflows; reduce the number of modes")
    d = b1 * a0 + a1 * (model.alpha - b0)
    scale = np.abs(b1 * a0) + np.abs(a1 * (model.alpha - b0))
    crit = critical.mask(n)

    phi, V = inp.phi.coeffs, inp.V.coeffs
    f = np.zeros(n)
    c = np.empty(n)
    for i in np.flatnonzero(~crit):
        if abs(d[i]) <= eps_den * scale[i]:
            raise DegenerateDenominator(i + 1, d[i])
        f[i] = ((model.alpha - b0[i]) * V[i] + b1[i] * phi[i]) / d[i]
        c[i] = (phi[i] - f[i] * a0[i]) / (b0[i] - model.alpha)
    free = {}
    for k in critical:
        c[k - 1] = free[k] = V[k - 1] / b1[k - 1]

    fv = SpectralVector(f)
    u = SpectralSolution(model, spectrum, c, SourceTerm.constant(fv), free, panels)
    return fv, u

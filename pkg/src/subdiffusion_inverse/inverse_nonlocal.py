"""Recovery of the non-local datum ``phi`` from ``u(xi2) = W``.

For a non-critical mode

    phi_k = (b(xi0) - alpha) / b(xi2) * (W_k - omega_k(xi2)) + omega_k(xi0),

and on critical modes ``phi_k = 0`` while ``u_k(t) = b(t) W_k / b(xi2)``.
Both ``omega`` values go through :func:`.forward.omega`, so the round trip
with the forward solver is consistent to rounding, not to quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadGeometry, OrthogonalityViolation, UnderflowGuard
from .forward import DEFAULT_PANELS, SourceTerm, SpectralSolution, omega
from .mittag_leffler import ml_b
from .spectral import (
    FractionalModel,
    SpectralVector,
    Spectrum,
    check_orthogonality,
    critical_set,
    sobolev_norm,
)

AMPLIFICATION_FLAG = 1e6


@dataclass(frozen=True)
class PhiRecoveryInput:
    model: FractionalModel
    xi2: float
    f: SourceTerm
    W: SpectralVector


def source_regularity(f: SourceTerm, spectrum: Spectrum, eps: float = 0.5) -> float:
    """``max_t ||A^eps f(t)||`` over the source samples.

    At finite truncation this is always finite; it is reported as a
    diagnostic of how fast the source coefficients decay.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if f.is_constant:
        return sobolev_norm(SpectralVector(f.values), spectrum, eps)
    return max(sobolev_norm(SpectralVector(col), spectrum, eps) for col in f.values.T)


def recover_phi(
    inp: PhiRecoveryInput,
    spectrum: Spectrum,
    *,
    eps_crit: float = 1e-9,
    orth_tol: float = 1e-12,
    panels: int = DEFAULT_PANELS,
) -> tuple[SpectralVector, SpectralSolution]:
    """Recover ``(phi, u)`` from the source ``f`` and ``W = u(xi2)``."""
    model, xi2 = inp.model, float(inp.xi2)
    f = inp.f
    n = len(spectrum)
    if len(f) != n or len(inp.W) != n:
        raise ValueError("f, W and the spectrum must have the same number of modes")
    if not (0.0 < xi2 <= model.T):
        raise BadGeometry(f"xi2={xi2} must lie in (0, T]")
    if xi2 == model.xi0:
        raise BadGeometry("xi2 = xi0 turns the problem into the backward problem")

    critical = critical_set(model, spectrum, eps_crit)
    ok, bad = check_orthogonality(f.values, critical, orth_tol)
    if not ok:
        raise OrthogonalityViolation(bad, "f")

    lam = spectrum.eigenvalues
    b0 = np.atleast_1d(ml_b(model.rho, lam, model.xi0))
    b2 = np.atleast_1d(ml_b(model.rho, lam, xi2))
    if np.any(b2 < np.finfo(float).tiny):
        raise UnderflowGuard("E_rho(-lambda xi2^rho) underflows; reduce the number of modes")
    w0 = omega(model.rho, lam, f, model.xi0, panels)
    w2 = omega(model.rho, lam, f, xi2, panels)
    W = inp.W.coeffs

    crit = critical.mask(n)
    phi = np.zeros(n)
    c = np.empty(n)
    nc = ~crit
    phi[nc] = (b0[nc] - model.alpha) / b2[nc] * (W[nc] - w2[nc]) + w0[nc]
    c[nc] = (phi[nc] - w0[nc]) / (b0[nc] - model.alpha)
    free = {}
    for k in critical:
        c[k - 1] = free[k] = W[k - 1] / b2[k - 1]

    pv = SpectralVector(phi)
    return pv, SpectralSolution(model, spectrum, c, f, free, panels)


@dataclass
class BackwardReport:
    xi2: float
    factors: np.ndarray
    flagged: list
    contributions: np.ndarray | None = None

    def rows(self):
        for k, fac in enumerate(self.factors, start=1):
            yield k, float(fac), k in self.flagged


def backward_limit_check(
    model: FractionalModel,
    spectrum: Spectrum,
    xi2: float,
    f: SourceTerm | None = None,
    W: SpectralVector | None = None,
    panels: int = DEFAULT_PANELS,
) -> BackwardReport:
    """Tabulate ``|(b(xi0) - alpha) / b(xi2)|`` per mode for ``alpha = 0``.

    Factors above ``AMPLIFICATION_FLAG`` are flagged. When ``W`` is given the
    report also carries ``|factor * (W_k - omega_k(xi2))|``.
    """
    if model.alpha != 0.0:
        raise ValueError("backward_limit_check expects alpha = 0")
    lam = spectrum.eigenvalues
    b0 = np.atleast_1d(ml_b(model.rho, lam, model.xi0))
    b2 = np.atleast_1d(ml_b(model.rho, lam, xi2))
    factors = np.abs((b0 - model.alpha) / b2)
    flagged = [int(k) for k in np.flatnonzero(factors > AMPLIFICATION_FLAG) + 1]
    contrib = None
    if W is not None:
        w2 = omega(model.rho, lam, f, xi2, panels) if f is not None else 0.0
        contrib = factors * np.abs(W.coeffs - w2)
    return BackwardReport(float(xi2), factors, flagged, contrib)

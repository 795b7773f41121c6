"""Independent residual checks for candidate solutions.

The Caputo derivative is approximated with the L1 scheme from pointwise
samples of ``u_k`` only; nothing here uses a Mittag-Leffler identity, so a
small equation residual is a genuine cross-check of the solvers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .forward import SourceTerm, SpectralSolution, TimeGrid
from .spectral import FractionalModel, SpectralVector, Spectrum

DEFAULT_GRID = 512
# equation residual is measured on t >= T * T_MIN_FRACTION
T_MIN_FRACTION = 0.25


def l1_weights(n: int, rho: float) -> np.ndarray:
    """``w_j = (j+1)^(1-rho) - j^(1-rho)`` for ``j = 0..n-1``."""
    j = np.arange(n, dtype=float)
    return (j + 1.0) ** (1.0 - rho) - j ** (1.0 - rho)


def caputo_l1(samples, rho: float, times=None, dt: float | None = None) -> np.ndarray:
    """L1 approximation of the Caputo derivative at every grid node.

    ``samples`` has shape ``(M+1,)`` or ``(N, M+1)`` on a uniform grid given by
    ``times`` or by the step ``dt``. The value at the first node is 0.
    """
    u = np.asarray(samples, dtype=float)
    one_d = u.ndim == 1
    u = np.atleast_2d(u)
    m = u.shape[1] - 1
    if m < 2:
        raise ValueError("L1 scheme needs at least 3 nodes")
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    if times is not None:
        times = np.asarray(times, dtype=float)
        steps = np.diff(times)
        if times.size != m + 1 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("L1 scheme requires a uniform grid")
        dt = float(steps[0])
    if dt is None or dt <= 0.0:
        raise ValueError("a positive step is required")

    w = l1_weights(m, rho)
    d = np.diff(u, axis=1)
    out = np.zeros_like(u)
    scale = dt ** (-rho) / math.gamma(2.0 - rho)
    for i in range(u.shape[0]):
        out[i, 1:] = scale * np.convolve(d[i], w)[:m]
    return out[0] if one_d else out


@dataclass
class ResidualReport:
    """Residuals of the three defining conditions.

    ``relative_equation_residual`` divides each mode's equation residual by
    ``lambda_k max|u_k| + max|f_k|`` over the whole grid.
    """

    equation_residual: float
    relative_equation_residual: float
    nonlocal_residual: float
    overdet_residual: float
    grid_intervals: int
    t_min: float
    equation_by_mode: list

    def to_dict(self) -> dict:
        return asdict(self)

    def within(self, equation_tol: float, condition_tol: float) -> bool:
        return (self.relative_equation_residual <= equation_tol
                and self.nonlocal_residual <= condition_tol
                and self.overdet_residual <= condition_tol)


def equation_residual(
    sol: SpectralSolution,
    f: SourceTerm,
    grid_intervals: int = DEFAULT_GRID,
    t_min: float | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-mode ``max |L1[u_k] + lambda_k u_k - f_k|`` over nodes ``t >= t_min``.

    Returns ``(per_mode, scale, nodes_used)`` where ``scale`` is
    ``lambda_k max|u_k| + max|f_k|``. ``t_min`` defaults to
    ``T * T_MIN_FRACTION``: the L1 error at the first nodes does not shrink
    under refinement because ``u_k`` behaves like ``t^rho`` near 0.
    """
    grid = TimeGrid.uniform(sol.model.T, grid_intervals)
    t = grid.nodes
    dt = t[1] - t[0]
    if t_min is None:
        t_min = sol.model.T * T_MIN_FRACTION
    t_min = max(t_min, dt)
    u = sol.sample(t)
    lam = sol.spectrum.eigenvalues[:, None]
    if f.is_constant:
        fk = np.repeat(f.values[:, None], t.size, axis=1)
    else:
        fk = np.stack([f.at(tj) for tj in t], axis=1)
    r = caputo_l1(u, sol.model.rho, dt=dt) + lam * u - fk
    keep = t >= t_min * (1.0 - 1e-12)
    scale = lam[:, 0] * np.max(np.abs(u), axis=1) + np.max(np.abs(fk), axis=1)
    return np.max(np.abs(r[:, keep]), axis=1), scale, t[keep]


def verify(
    sol: SpectralSolution,
    model: FractionalModel,
    spectrum: Spectrum,
    f: SourceTerm | SpectralVector | None,
    phi: SpectralVector,
    overdet: tuple[float, SpectralVector] | None = None,
    grid_intervals: int = DEFAULT_GRID,
    t_min: float | None = None,
) -> ResidualReport:
    """Check the equation, the non-local condition and (optionally) ``u(xi*) = target``."""
    n = len(spectrum)
    if f is None:
        f = SourceTerm.zeros(n)
    elif isinstance(f, SpectralVector):
        f = SourceTerm.constant(f)
    per_mode, scale, nodes = equation_residual(sol, f, grid_intervals, t_min)
    rel = np.divide(per_mode, scale, out=np.zeros_like(per_mode), where=scale > 0.0)
    nl = sol(model.xi0) - model.alpha * sol(0.0) - phi.coeffs
    od = 0.0
    if overdet is not None:
        xi, target = overdet
        od = float(np.max(np.abs(sol(xi) - target.coeffs)))
    return ResidualReport(
        equation_residual=float(per_mode.max()),
        relative_equation_residual=float(rel.max()),
        nonlocal_residual=float(np.max(np.abs(nl))),
        overdet_residual=od,
        grid_intervals=grid_intervals,
        t_min=float(nodes[0]),
        equation_by_mode=[float(v) for v in per_mode],
    )

"""Mode-by-mode solution of the forward non-local problem.

Each Fourier coefficient of the solution has the form

    u_k(t) = c_k E_rho(-lambda_k t^rho) + omega_k(t),

where ``omega_k`` is the zero-initial-value response to the source

    omega_k(t) = int_0^t eta^(rho-1) E_{rho,rho}(-lambda_k eta^rho) f_k(t - eta) d eta.

For a time-independent source ``omega_k(t) = f_k t^rho E_{rho,rho+1}(-lambda_k t^rho)``.
On critical modes (``E_rho(-lambda_k xi0^rho) = alpha``) the amplitude ``c_k``
is not determined by the data and is taken from ``b_free``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NearCriticalDenominator, OrthogonalityViolation
from .mittag_leffler import ml_a, ml_b, mittag_leffler
from .spectral import (
    CriticalSet,
    FractionalModel,
    SpectralVector,
    Spectrum,
    check_orthogonality,
    critical_band,
    critical_set,
)

DEFAULT_PANELS = 512


@dataclass(frozen=True, eq=False)
class TimeGrid:
    nodes: np.ndarray

    def __post_init__(self):
        t = np.array(self.nodes, dtype=float).ravel()
        if t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
            raise ValueError("time grid must start at 0 and be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "nodes", t)

    @classmethod
    def uniform(cls, T: float, m: int) -> TimeGrid:
        """``m`` intervals on ``[0, T]``."""
        if m < 1:
            raise ValueError("need at least one interval")
        return cls(np.linspace(0.0, T, m + 1))

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def is_uniform(self) -> bool:
        dt = np.diff(self.nodes)
        return bool(np.allclose(dt, dt[0], rtol=1e-9, atol=0.0))


@dataclass(frozen=True, eq=False)
class SourceTerm:
    """Either constant coefficients ``f_k`` or per-mode samples ``f_k(t_j)``.

    ``values`` has shape ``(N,)`` for a constant source and ``(N, len(grid))``
    for a sampled one; sampled sources are interpolated linearly in time.
    """

    values: np.ndarray
    grid: TimeGrid | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if self.grid is None:
            v = v.ravel()
        elif v.ndim != 2 or v.shape[1] != self.grid.nodes.size:
            raise ValueError("sampled source must have shape (N, number of time nodes)")
        if not np.all(np.isfinite(v)):
            raise ValueError("source samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, f) -> SourceTerm:
        c = f.coeffs if isinstance(f, SpectralVector) else f
        return cls(np.asarray(c, dtype=float))

    @classmethod
    def zeros(cls, n: int) -> SourceTerm:
        return cls(np.zeros(n))

    @classmethod
    def sampled(cls, grid: TimeGrid, values) -> SourceTerm:
        return cls(np.asarray(values, dtype=float), grid)

    @classmethod
    def from_function(cls, grid: TimeGrid, func) -> SourceTerm:
        """``func(t)`` returns the ``N`` coefficients at time ``t``."""
        cols = [np.asarray(func(t), dtype=float).ravel() for t in grid.nodes]
        return cls(np.stack(cols, axis=1), grid)

    @property
    def is_constant(self) -> bool:
        return self.grid is None

    def __len__(self) -> int:
        return self.values.shape[0]

    def at(self, t: float) -> np.ndarray:
        """Coefficients ``f_k(t)``."""
        if self.is_constant:
            return self.values.copy()
        return _interp_rows(self.grid.nodes, self.values, np.atleast_1d(float(t)))[:, 0]

    def __add__(self, other: SourceTerm) -> SourceTerm:
        if self.is_constant and other.is_constant:
            return SourceTerm(self.values + other.values)
        grid = self.grid or other.grid
        if self.grid is not None and other.grid is not None and not np.array_equal(
            self.grid.nodes, other.grid.nodes
        ):
            raise ValueError("sampled sources live on different grids")
        a = self.values if not self.is_constant else np.repeat(self.values[:, None], grid.nodes.size, 1)
        b = other.values if not other.is_constant else np.repeat(other.values[:, None], grid.nodes.size, 1)
        return SourceTerm(a + b, grid)

    def scaled(self, factor: float) -> SourceTerm:
        return SourceTerm(self.values * factor, self.grid)


def _interp_rows(nodes: np.ndarray, values: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Row-wise linear interpolation of ``values`` (N, M+1) at points ``tau``."""
    tau = np.clip(tau, nodes[0], nodes[-1])
    j = np.clip(np.searchsorted(nodes, tau, side="right") - 1, 0, nodes.size - 2)
    w = (tau - nodes[j]) / (nodes[j + 1] - nodes[j])
    return values[:, j] * (1.0 - w) + values[:, j + 1] * w


def _simpson_weights(n: int) -> np.ndarray:
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def omega(rho: float, lam, f, t, panels: int = DEFAULT_PANELS):
    """Zero-initial-value response ``omega_k(t)``.

    ``f`` is a :class:`SourceTerm`, an array of constant coefficients, or a
    scalar (single mode). For sampled sources the substitution ``s = eta^rho``
    turns the weakly singular integral into

        (1/rho) int_0^{t^rho} E_{rho,rho}(-lambda s) f(t - s^(1/rho)) ds,

    which is integrated by composite Simpson with ``panels`` subintervals.
    Returns an array of length ``N`` (or a float for scalar ``lam``).
    """
    scalar = np.ndim(lam) == 0
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    t = float(t)
    if t < 0.0:
        raise ValueError("omega needs t >= 0")
    if not isinstance(f, SourceTerm):
        f = SourceTerm.constant(np.broadcast_to(np.asarray(f, dtype=float), lam.shape))
    if len(f) != lam.size:
        raise ValueError("source and eigenvalues are not aligned")

    if f.is_constant:
        out = f.values * np.atleast_1d(ml_a(rho, lam, t))
    else:
        if t > f.grid.T * (1.0 + 1e-12):
            raise ValueError(f"t={t} lies outside the source samples [0, {f.grid.T}]")
        if t == 0.0:
            out = np.zeros(lam.size)
        else:
            n = panels + (panels % 2)
            s = np.linspace(0.0, t**rho, n + 1)
            w = _simpson_weights(n) * (s[1] - s[0]) / rho
            kern = mittag_leffler(-np.outer(lam, s), rho, rho)
            fs = _interp_rows(f.grid.nodes, f.values, t - s ** (1.0 / rho))
            out = (kern * fs) @ w
    return float(out[0]) if scalar else out


@dataclass(frozen=True, eq=False)
class SpectralSolution:
    """``u_k(t) = c_k E_rho(-lambda_k t^rho) + omega_k(t)`` for every mode.

    ``free_modes`` maps the 1-based critical modes to their amplitudes.
    """

    model: FractionalModel
    spectrum: Spectrum
    amplitudes: np.ndarray
    source: SourceTerm
    free_modes: dict = field(default_factory=dict)
    panels: int = DEFAULT_PANELS

    def __post_init__(self):
        c = np.array(self.amplitudes, dtype=float).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "amplitudes", c)

    def __len__(self) -> int:
        return self.amplitudes.size

    def __call__(self, t: float) -> np.ndarray:
        t = float(t)
        if t < 0.0 or t > self.model.T * (1.0 + 1e-12):
            raise ValueError(f"t={t} outside [0, {self.model.T}]")
        lam = self.spectrum.eigenvalues
        hom = self.amplitudes * np.atleast_1d(ml_b(self.model.rho, lam, t))
        return hom + omega(self.model.rho, lam, self.source, t, self.panels)

    def sample(self, times) -> np.ndarray:
        """Array of shape ``(N, len(times))``."""
        times = np.asarray(times, dtype=float).ravel()
        if self.source.is_constant:
            if np.any(times < 0.0) or np.any(times > self.model.T * (1.0 + 1e-12)):
                raise ValueError("times outside [0, T]")
            lam = self.spectrum.eigenvalues[:, None]
            rho = self.model.rho
            return (self.amplitudes[:, None] * ml_b(rho, lam, times[None, :])
                    + self.source.values[:, None] * ml_a(rho, lam, times[None, :]))
        return np.stack([self(t) for t in times], axis=1)


def eval_solution(sol: SpectralSolution, t: float) -> SpectralVector:
    """Coefficients ``(u_k(t))_k``."""
    return SpectralVector(sol(t))


def solve_forward(
    model: FractionalModel,
    spectrum: Spectrum,
    f: SourceTerm | SpectralVector | None,
    phi: SpectralVector,
    b_free: dict | None = None,
    *,
    eps_crit: float = 1e-9,
    orth_tol: float = 1e-12,
    panels: int = DEFAULT_PANELS,
    critical: CriticalSet | None = None,
) -> SpectralSolution:
    """Solve ``D^rho u + A u = f``, ``u(xi0) = alpha u(0) + phi``.

    Non-critical modes get ``c_k = (phi_k - omega_k(xi0)) / (E_rho(-lambda_k xi0^rho) - alpha)``.
    Critical modes require ``phi_k = 0`` and ``f_k(t) = 0`` and take
    ``c_k = b_free[k]`` (default 0).
    """
    n = len(spectrum)
    if f is None:
        f = SourceTerm.zeros(n)
    elif isinstance(f, SpectralVector):
        f = SourceTerm.constant(f)
    if len(phi) != n or len(f) != n:
        raise ValueError("phi, f and the spectrum must have the same number of modes")
    if critical is None:
        critical = critical_set(model, spectrum, eps_crit)
    b_free = {int(k): float(v) for k, v in (b_free or {}).items()}
    stray = sorted(set(b_free) - set(critical.indices))
    if stray:
        raise ValueError(f"free coefficients given for non-critical modes {stray}")

    ok, bad = check_orthogonality(phi, critical, orth_tol)
    if not ok:
        raise OrthogonalityViolation(bad, "phi")
    ok, bad = check_orthogonality(f.values, critical, orth_tol)
    if not ok:
        raise OrthogonalityViolation(bad, "f")

    lam = spectrum.eigenvalues
    den = np.atleast_1d(ml_b(model.rho, lam, model.xi0)) - model.alpha
    crit = critical.mask(n)
    band = critical_band(model.alpha, eps_crit)
    for i in np.flatnonzero(~crit):
        if abs(den[i]) <= band or den[i] == 0.0:
            raise NearCriticalDenominator(i + 1, den[i])

    w0 = omega(model.rho, lam, f, model.xi0, panels)
    c = np.empty(n)
    c[~crit] = (phi.coeffs[~crit] - w0[~crit]) / den[~crit]
    free = {}
    for k in critical:
        c[k - 1] = free[k] = b_free.get(k, 0.0)
    return SpectralSolution(model, spectrum, c, f, free, panels)


def classical_limit(lam: float, f: float, c0: float, t: float) -> float:
    """``rho = 1`` solution of ``u' + lam u = f`` with ``u(0) = c0``."""
    return c0 * math.exp(-lam * t) + f * (1.0 - math.exp(-lam * t)) / lam

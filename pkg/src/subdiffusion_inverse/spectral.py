"""Eigen-expansion of the operator A.

A is represented by a finite, non-decreasing list of positive eigenvalues
(repeats encode multiplicity) and, optionally, a concrete orthonormal basis
that allows synthesis and projection of functions of ``x``.

Mode numbers exposed to users (critical sets, free coefficients, error
reports) are 1-based; array positions are 0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .mittag_leffler import ml_b


@dataclass(frozen=True)
class DirichletBasis:
    """``v_k(x) = sqrt(2/L) sin(k pi x / L)`` on ``(0, L)``."""

    length: float

    def __call__(self, k: int, x):
        x = np.asarray(x, dtype=float)
        return math.sqrt(2.0 / self.length) * np.sin(k * math.pi * x / self.length)

    def matrix(self, n: int, x) -> np.ndarray:
        """Rows are ``v_1..v_n`` sampled at ``x``."""
        k = np.arange(1, n + 1)[:, None]
        x = np.asarray(x, dtype=float)[None, :]
        return math.sqrt(2.0 / self.length) * np.sin(k * math.pi * x / self.length)

    def describe(self) -> dict:
        return {"kind": "dirichlet", "L": self.length}


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    realization: DirichletBasis | None = None

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).ravel()
        if lam.size == 0:
            raise ValueError("spectrum needs at least one eigenvalue")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0.0):
            raise ValueError("eigenvalues must be finite and positive")
        if np.any(np.diff(lam) < 0.0):
            raise ValueError("eigenvalues must be non-decreasing")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    def __len__(self) -> int:
        return self.eigenvalues.size

    @property
    def modes(self) -> np.ndarray:
        """1-based mode numbers."""
        return np.arange(1, len(self) + 1)


@dataclass(frozen=True, eq=False)
class SpectralVector:
    """Fourier coefficients ``h_k = (h, v_k)``, aligned with a spectrum."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self) -> int:
        return self.coeffs.size

    def __add__(self, other: SpectralVector) -> SpectralVector:
        return SpectralVector(self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralVector) -> SpectralVector:
        return SpectralVector(self.coeffs - other.coeffs)

    def __mul__(self, scale: float) -> SpectralVector:
        return SpectralVector(self.coeffs * scale)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, n: int) -> SpectralVector:
        return cls(np.zeros(n))

    @classmethod
    def unit(cls, n: int, k: int) -> SpectralVector:
        """Coefficient vector of ``v_k`` (1-based ``k``)."""
        if not 1 <= k <= n:
            raise ValueError(f"mode {k} outside 1..{n}")
        c = np.zeros(n)
        c[k - 1] = 1.0
        return cls(c)


@dataclass(frozen=True)
class FractionalModel:
    """Scalars of the non-local problem ``u(xi0) = alpha u(0) + phi``."""

    rho: float
    alpha: float
    T: float
    xi0: float

    def __post_init__(self):
        if not (0.0 < self.rho < 1.0):
            raise ValueError(f"rho must lie in (0, 1), got {self.rho!r}")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if not (self.T > 0.0) or not math.isfinite(self.T):
            raise ValueError(f"T must be positive, got {self.T!r}")
        if not (0.0 < self.xi0 <= self.T):
            raise ValueError(f"xi0 must lie in (0, T], got {self.xi0!r}")


@dataclass(frozen=True)
class CriticalSet:
    """Modes with ``|E_rho(-lambda_k xi0^rho) - alpha| <= band``."""

    indices: frozenset = field(default_factory=frozenset)
    alpha: float = 0.0
    tolerance: float = 1e-9

    def __contains__(self, k: int) -> bool:
        return k in self.indices

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(sorted(self.indices))

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        for k in self.indices:
            m[k - 1] = True
        return m


def dirichlet_spectrum(n: int, length: float = 1.0) -> Spectrum:
    """First ``n`` eigenpairs of ``-d^2/dx^2`` on ``(0, length)`` with Dirichlet ends."""
    if int(n) != n or n < 1:
        raise ValueError(f"N must be a positive integer, got {n!r}")
    if not (length > 0.0) or not math.isfinite(length):
        raise ValueError(f"L must be positive, got {length!r}")
    k = np.arange(1, int(n) + 1)
    return Spectrum((k * math.pi / length) ** 2, DirichletBasis(float(length)))


def fourier_coeffs(samples, spectrum: Spectrum, x=None) -> SpectralVector:
    """Project samples of ``h`` on a uniform grid of ``[0, L]`` onto ``v_1..v_N``.

    ``samples`` must include both endpoints. Composite trapezoid rule; the
    grid has to carry at least ``4N`` points.
    """
    basis = spectrum.realization
    if basis is None:
        raise ValueError("spectrum has no concrete basis; cannot project samples")
    h = np.asarray(samples, dtype=float).ravel()
    n = len(spectrum)
    if h.size < 4 * n:
        raise ValueError(f"grid of {h.size} points under-resolves {n} modes (need >= {4 * n})")
    if x is None:
        x = np.linspace(0.0, basis.length, h.size)
    else:
        x = np.asarray(x, dtype=float)
        dx = np.diff(x)
        if x.size != h.size or not np.allclose(dx, dx[0], rtol=1e-9, atol=0.0):
            raise ValueError("samples must lie on a uniform grid")
    step = (x[-1] - x[0]) / (x.size - 1)
    w = np.full(x.size, step)
    w[0] = w[-1] = 0.5 * step
    return SpectralVector(basis.matrix(n, x) @ (w * h))


def synthesize(h: SpectralVector, spectrum: Spectrum, x) -> np.ndarray:
    """Evaluate ``sum_k h_k v_k(x)``."""
    basis = spectrum.realization
    if basis is None:
        raise ValueError("spectrum has no concrete basis; cannot synthesize")
    return h.coeffs @ basis.matrix(len(spectrum), x)


def sobolev_norm(h: SpectralVector, spectrum: Spectrum, tau: float) -> float:
    """``||A^tau h|| = (sum lambda_k^(2 tau) h_k^2)^(1/2)``."""
    c = _aligned(h, spectrum)
    if tau == 0:
        return float(np.linalg.norm(c))
    return float(np.linalg.norm(spectrum.eigenvalues**tau * c))


def critical_band(alpha: float, eps_crit: float) -> float:
    """Width of the band around ``alpha`` treated as exact equality."""
    return eps_crit * abs(alpha)


def critical_set(model: FractionalModel, spectrum: Spectrum, eps_crit: float = 1e-9) -> CriticalSet:
    """Modes where ``E_rho(-lambda_k xi0^rho)`` equals ``alpha`` up to the band.

    Equal eigenvalues give identical ``b`` values, so a repeated eigenvalue is
    either entirely in or entirely out of the set.
    """
    band = critical_band(model.alpha, eps_crit)
    b0 = np.asarray(ml_b(model.rho, spectrum.eigenvalues, model.xi0))
    hit = np.flatnonzero(np.abs(b0 - model.alpha) <= band) + 1
    return CriticalSet(frozenset(int(k) for k in hit), model.alpha, eps_crit)


def check_orthogonality(h, critical: CriticalSet, tol: float = 1e-12):
    """Return ``(ok, violators)``: ``ok`` iff ``|h_k| <= tol`` on every critical mode.

    ``h`` may be a :class:`SpectralVector` or an ``(N, M)`` array of per-mode
    time samples, in which case every sample is checked.
    """
    c = h.coeffs if isinstance(h, SpectralVector) else np.asarray(h, dtype=float)
    bad = []
    for k in critical:
        if np.any(np.abs(c[k - 1]) > tol):
            bad.append(k)
    return not bad, bad


def _aligned(h: SpectralVector, spectrum: Spectrum) -> np.ndarray:
    if len(h) != len(spectrum):
        raise ValueError(f"vector has {len(h)} coefficients but spectrum has {len(spectrum)} modes")
    return h.coeffs


# JSON documents: {"eigenvalues": [...], "coeffs": [...]}

def to_document(h: SpectralVector, spectrum: Spectrum) -> dict:
    doc = {"eigenvalues": [float(v) for v in spectrum.eigenvalues],
           "coeffs": [float(v) for v in _aligned(h, spectrum)]}
    if spectrum.realization is not None:
        doc["realization"] = spectrum.realization.describe()
    return doc


def from_document(doc) -> tuple[SpectralVector, Spectrum]:
    if isinstance(doc, str):
        doc = json.loads(doc)
    real = doc.get("realization")
    basis = DirichletBasis(float(real["L"])) if real else None
    spectrum = Spectrum(np.asarray(doc["eigenvalues"], dtype=float), basis)
    h = SpectralVector(np.asarray(doc["coeffs"], dtype=float))
    _aligned(h, spectrum)
    return h, spectrum

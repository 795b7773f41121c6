r"""Mittag-Leffler function on the non-positive real axis.

.. math::

    E_{\rho,\mu}(z) = \sum_{n \ge 0} \frac{z^n}{\Gamma(\rho n + \mu)}

Three regimes are used, all vectorized over ``z``:

* ``|z| <= Z_TAYLOR``: the power series (terms are bounded by ``1/Gamma``,
  so there is no cancellation);
* ``Z_TAYLOR < |z| < Z_ASYMPTOTIC``: inversion of the Laplace transform
  ``s^(rho-mu) / (s^rho - z)`` by the trapezoid rule on a parabolic
  Bromwich contour ``s(u) = c (1 + iu)^2``;
* ``|z| >= Z_ASYMPTOTIC``: the algebraic asymptotic expansion
  ``-sum_k z^-k / Gamma(mu - rho k)``.

For ``z <= 0`` and ``0 < rho <= 1`` the transform has no poles off the
negative real axis, so the contour parameters do not depend on ``z`` and
the nodes can be cached per ``(rho, mu)``.

The derived kernels used by the solvers are

* ``ml_b(rho, lam, t) = E_rho(-lam t^rho)``,
* ``ml_a(rho, lam, t) = t^rho E_{rho,rho+1}(-lam t^rho)``,
* ``ml_kernel(rho, lam, eta) = eta^(rho-1) E_{rho,rho}(-lam eta^rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import rgamma

Z_TAYLOR = 1.0
Z_ASYMPTOTIC = 50.0
# lam * t^rho above this uses a = (1 - b) / lam
EPS_SWITCH = 1e-4

_CONTOUR_NODES = 20
_ASYMPTOTIC_TERMS = 40


@dataclass(frozen=True)
class MLParams:
    """Order ``rho`` in (0, 1] and second parameter ``mu > 0``."""

    rho: float
    mu: float = 1.0

    def __post_init__(self):
        _check_params(self.rho, self.mu)


def _check_params(rho: float, mu: float) -> None:
    if not (0.0 < rho <= 1.0) or not math.isfinite(rho):
        raise ValueError(f"rho must lie in (0, 1], got {rho!r}")
    if not (mu > 0.0) or not math.isfinite(mu):
        raise ValueError(f"mu must be positive, got {mu!r}")


@lru_cache(maxsize=256)
def _taylor_coefficients(rho: float, mu: float) -> np.ndarray:
    # 1/Gamma(x) < 1e-18 once x >= 21, so stop there
    nmax = int(math.ceil((21.0 - mu) / rho)) + 1
    n = np.arange(max(nmax, 2))
    return rgamma(rho * n + mu)


@lru_cache(maxsize=256)
def _contour_weights(rho: float, mu: float):
    n = _CONTOUR_NODES
    h = 3.0 / n
    c = math.pi * n / 12.0
    u = h * np.arange(-n, n + 1)
    s = c * (1.0 + 1j * u) ** 2
    ds = 2j * c * (1.0 + 1j * u)
    weights = h * np.exp(s) * s ** (rho - mu) * ds / (2j * math.pi)
    return s**rho, weights


@lru_cache(maxsize=256)
def _asymptotic_coefficients(rho: float, mu: float) -> np.ndarray:
    k = np.arange(1, _ASYMPTOTIC_TERMS + 1)
    # rgamma vanishes at the poles of Gamma, which drops those terms
    return (-1.0) ** (k + 1) * rgamma(mu - rho * k)


def _taylor(x: np.ndarray, rho: float, mu: float) -> np.ndarray:
    coef = _taylor_coefficients(rho, mu)
    z = -x
    acc = np.full_like(z, coef[-1])
    for c in coef[-2::-1]:
        acc = acc * z + c
    return acc


def _contour(x: np.ndarray, rho: float, mu: float, chunk: int = 4096) -> np.ndarray:
    s_rho, weights = _contour_weights(rho, mu)
    out = np.empty_like(x)
    for i in range(0, x.size, chunk):
        xi = x[i : i + chunk]
        out[i : i + chunk] = ((1.0 / (s_rho[None, :] + xi[:, None])) @ weights).real
    return out


def _asymptotic(x: np.ndarray, rho: float, mu: float) -> np.ndarray:
    coef = _asymptotic_coefficients(rho, mu)
    inv = 1.0 / x
    acc = np.full_like(x, coef[-1])
    for c in coef[-2::-1]:
        acc = acc * inv + c
    return acc * inv


def mittag_leffler(z, rho: float, mu: float = 1.0):
    """Evaluate ``E_{rho,mu}(z)`` for real ``z <= 0``.

    Accepts scalars or arrays; returns a float for scalar input.
    Raises ``ValueError`` for ``z > 0`` or parameters out of range.
    """
    rho = float(rho)
    mu = float(mu)
    _check_params(rho, mu)
    z_arr = np.asarray(z, dtype=float)
    if np.any(np.isnan(z_arr)):
        raise ValueError("z contains NaN")
    if np.any(z_arr > 0.0):
        raise ValueError("mittag_leffler is only implemented for z <= 0")

    x = np.ravel(-z_arr).astype(float)
    out = np.empty_like(x)
    small = x <= Z_TAYLOR
    large = x >= Z_ASYMPTOTIC
    mid = ~(small | large)
    if small.any():
        out[small] = _taylor(x[small], rho, mu)
    if mid.any():
        out[mid] = _contour(x[mid], rho, mu)
    if large.any():
        xl = x[large]
        out[large] = _asymptotic(np.where(np.isinf(xl), 1.0, xl), rho, mu)
        out[large] = np.where(np.isinf(xl), 0.0, out[large])
    out = out.reshape(z_arr.shape)
    if out.ndim == 0:
        return float(out)
    return out


def ml(params: MLParams, z):
    """``E_{rho,mu}(z)`` with parameters bundled in :class:`MLParams`."""
    return mittag_leffler(z, params.rho, params.mu)


def _lam_t(lam, t):
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(lam <= 0.0):
        raise ValueError("eigenvalues must be positive")
    if np.any(t < 0.0):
        raise ValueError("t must be non-negative")
    return lam, t


def _scalar(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def ml_b(rho: float, lam, t):
    """``b(t) = E_rho(-lam t^rho)``, broadcasting over ``lam`` and ``t``."""
    lam, t = _lam_t(lam, t)
    with np.errstate(over="ignore"):  # lam t^rho = inf is a valid argument
        z = -lam * t**rho
    return _scalar(mittag_leffler(z, rho, 1.0))


def ml_a(rho: float, lam, t):
    """``a(t) = t^rho E_{rho,rho+1}(-lam t^rho)``.

    Uses ``(1 - b(t)) / lam`` when ``lam t^rho > EPS_SWITCH`` and the direct
    series below that, where ``1 - b`` would lose digits.
    """
    lam, t = _lam_t(lam, t)
    lam, t = np.broadcast_arrays(lam, t)
    tr = t**rho
    x = lam * tr
    out = np.empty(x.shape)
    far = x > EPS_SWITCH
    if far.any():
        out[far] = (1.0 - mittag_leffler(-x[far], rho, 1.0)) / lam[far]
    if (~far).any():
        out[~far] = tr[~far] * mittag_leffler(-x[~far], rho, rho + 1.0)
    return _scalar(out)


def ml_kernel(rho: float, lam, eta):
    """``eta^(rho-1) E_{rho,rho}(-lam eta^rho)`` for ``eta > 0``."""
    lam = np.asarray(lam, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(eta <= 0.0):
        raise ValueError("ml_kernel requires eta > 0")
    if np.any(lam <= 0.0):
        raise ValueError("eigenvalues must be positive")
    er = eta**rho
    return _scalar(eta ** (rho - 1.0) * mittag_leffler(-lam * er, rho, rho))

"""Recovery of the non-local datum phi from u(xi2) = W."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdiffusion_inverse import (
    BadGeometry,
    FractionalModel,
    OrthogonalityViolation,
    PhiRecoveryInput,
    SourceTerm,
    SpectralVector,
    Spectrum,
    TimeGrid,
    UnderflowGuard,
    backward_limit_check,
    dirichlet_spectrum,
    ml_b,
    recover_phi,
    solve_forward,
    source_regularity,
    verify,
)


def _source(rng, n, grid=None):
    if grid is None:
        return SourceTerm.constant(rng.standard_normal(n))
    amp, freq = rng.standard_normal(n), rng.uniform(0.5, 3.0, n)
    return SourceTerm.sampled(grid, amp[:, None] * np.cos(freq[:, None] * grid.nodes))


def test_zero_data():
    spec = dirichlet_spectrum(5)
    model = FractionalModel(0.5, 0.4, 2.0, 1.0)
    phi, u = recover_phi(PhiRecoveryInput(model, 1.5, SourceTerm.zeros(5), SpectralVector.zeros(5)), spec)
    assert np.all(phi.coeffs == 0.0)
    assert np.all(u(0.7) == 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([0.3, 0.5, 0.8]), st.sampled_from([0.2, 0.5, 0.9, 1.5, -1.0]),
       st.sampled_from([0.5, 1.5]))
def test_round_trip_constant_source(seed, rho, alpha, side):
    rng = np.random.default_rng(seed)
    spec = dirichlet_spectrum(10)
    xi0 = 1.0
    model = FractionalModel(rho, alpha, 2.0, xi0)
    f = _source(rng, 10)
    phi_true = SpectralVector(rng.standard_normal(10))
    fwd = solve_forward(model, spec, f, phi_true)
    W = SpectralVector(fwd(side * xi0))
    phi, u = recover_phi(PhiRecoveryInput(model, side * xi0, f, W), spec)
    assert np.all(np.abs(phi.coeffs - phi_true.coeffs) <= 1e-8 * np.abs(phi_true.coeffs))
    assert np.max(np.abs(u(side * xi0) - W.coeffs)) <= 1e-10 * max(1.0, np.max(np.abs(W.coeffs)))
    again = solve_forward(model, spec, f, phi)
    times = np.linspace(0.0, 2.0, 20)
    ref = again.sample(times)
    assert np.max(np.abs(u.sample(times) - ref)) <= 1e-8 * np.max(np.abs(ref))


@pytest.mark.parametrize("side", [0.5, 1.5])
def test_round_trip_time_dependent_source(side):
    rng = np.random.default_rng(42)
    spec = dirichlet_spectrum(8)
    model = FractionalModel(0.5, 0.3, 2.0, 1.0)
    f = _source(rng, 8, TimeGrid.uniform(2.0, 256))
    phi_true = SpectralVector(rng.standard_normal(8))
    fwd = solve_forward(model, spec, f, phi_true)
    phi, _ = recover_phi(PhiRecoveryInput(model, side, f, SpectralVector(fwd(side))), spec)
    # same quadrature on both legs: agreement far below the quadrature error
    assert np.max(np.abs(phi.coeffs - phi_true.coeffs)) <= 1e-10 * np.max(np.abs(phi_true.coeffs))


def test_time_dependent_recovery_against_exact_measurement():
    """W from a fine-grid forward solve; recovery on coarser grids converges at order 2."""
    spec = Spectrum([2.0, 9.0])
    model = FractionalModel(0.6, 0.4, 2.0, 1.0)
    phi_true = SpectralVector([1.0, -0.5])
    amp = np.array([1.0, 0.7])

    def source(m):
        grid = TimeGrid.uniform(2.0, m)
        return SourceTerm.from_function(grid, lambda t: amp * math.cos(2.5 * t))

    fine = solve_forward(model, spec, source(8192), phi_true, panels=8192)
    W = SpectralVector(fine(1.5))
    errs = []
    for m in (128, 256, 512):
        phi, _ = recover_phi(PhiRecoveryInput(model, 1.5, source(m), W), spec, panels=8192)
        errs.append(np.max(np.abs(phi.coeffs - phi_true.coeffs)))
    assert errs[-1] <= 1e-5
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.3), orders


def test_critical_mode_recovery():
    spec = dirichlet_spectrum(5)
    rho, xi0 = 0.5, 1.0
    alpha = ml_b(rho, spec.eigenvalues[2], xi0)
    model = FractionalModel(rho, alpha, 2.0, xi0)
    f = SourceTerm.constant([0.2, 0.1, 0.0, -0.3, 0.05])
    phi_true = SpectralVector([1.0, 0.5, 0.0, 0.25, 0.0])
    for b3 in (0.0, 7.0):
        fwd = solve_forward(model, spec, f, phi_true, {3: b3})
        W = SpectralVector(fwd(1.5))
        phi, u = recover_phi(PhiRecoveryInput(model, 1.5, f, W), spec)
        assert phi.coeffs[2] == 0.0
        assert u(0.0)[2] == pytest.approx(b3, abs=1e-12)
        assert u.free_modes[3] == pytest.approx(b3, abs=1e-12)
        assert np.allclose(phi.coeffs, phi_true.coeffs, rtol=1e-8, atol=1e-14)


def test_errors():
    spec = dirichlet_spectrum(3)
    model = FractionalModel(0.5, 0.3, 2.0, 1.0)
    f = SourceTerm.zeros(3)
    W = SpectralVector([1.0, 0.0, 0.0])
    with pytest.raises(BadGeometry):
        recover_phi(PhiRecoveryInput(model, 1.0, f, W), spec)
    with pytest.raises(BadGeometry):
        recover_phi(PhiRecoveryInput(model, 2.5, f, W), spec)
    alpha = ml_b(0.5, spec.eigenvalues[1], 1.0)
    crit_model = FractionalModel(0.5, alpha, 2.0, 1.0)
    with pytest.raises(OrthogonalityViolation):
        recover_phi(PhiRecoveryInput(crit_model, 1.5, SourceTerm.constant([0.0, 1.0, 0.0]), W), spec)


def test_underflow_guard():
    # b(xi2) ~ 1/(lambda xi2^rho Gamma(1-rho)) only underflows for enormous lambda
    spec = Spectrum([1.0, 1.7e308])
    model = FractionalModel(0.999, 0.3, 2.0, 1.0)
    with pytest.raises(UnderflowGuard):
        recover_phi(PhiRecoveryInput(model, 1.5, SourceTerm.zeros(2), SpectralVector.zeros(2)), spec)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.floats(-2.0, 2.0))
def test_linearity_in_data(seed, scale):
    rng = np.random.default_rng(seed)
    spec = dirichlet_spectrum(6)
    model = FractionalModel(0.4, 0.6, 2.0, 1.0)
    grid = TimeGrid.uniform(2.0, 32)
    f1, f2 = _source(rng, 6, grid), _source(rng, 6, grid)
    W1, W2 = SpectralVector(rng.standard_normal(6)), SpectralVector(rng.standard_normal(6))

    def rec(f, W):
        return recover_phi(PhiRecoveryInput(model, 0.5, f, W), spec, panels=64)[0].coeffs

    combined = rec(f1 + f2.scaled(scale), W1 + W2 * scale)
    assert np.allclose(combined, rec(f1, W1) + scale * rec(f2, W2), rtol=0, atol=1e-10)


def test_verify_output_of_recovery():
    spec = dirichlet_spectrum(6)
    model = FractionalModel(0.5, 0.3, 2.0, 1.0)
    grid = TimeGrid.uniform(2.0, 128)
    f = _source(np.random.default_rng(1), 6, grid)
    W = SpectralVector(np.linspace(0.3, -0.2, 6))
    phi, u = recover_phi(PhiRecoveryInput(model, 0.5, f, W), spec)
    rep = verify(u, model, spec, f, phi, (0.5, W))
    assert rep.overdet_residual <= 1e-10
    assert rep.nonlocal_residual <= 1e-10
    assert rep.relative_equation_residual <= 1e-2


def test_backward_limit_check():
    spec = dirichlet_spectrum(16)
    model = FractionalModel(0.5, 0.0, 2.0, 1.0)
    near = backward_limit_check(model, spec, 0.999)
    assert np.allclose(near.factors, 1.0, atol=2e-3)
    early = backward_limit_check(model, spec, 0.01)
    assert np.all(early.factors < 1.0)
    assert np.all(np.diff(early.factors) < 0.0)
    late = backward_limit_check(model, spec, 2.0)
    assert np.all(late.factors > 1.0) and late.flagged == []
    W = SpectralVector(np.ones(16))
    rep = backward_limit_check(model, spec, 1.5, SourceTerm.zeros(16), W)
    assert np.allclose(rep.contributions, rep.factors)
    rows = list(rep.rows())
    assert rows[0][0] == 1 and len(rows) == 16
    with pytest.raises(ValueError):
        backward_limit_check(FractionalModel(0.5, 0.2, 2.0, 1.0), spec, 1.5)


def test_backward_flag_for_huge_amplification():
    # the algebraic tail of b keeps factors moderate unless rho is very close to 1
    spec = Spectrum([1.0, 25.0])
    model = FractionalModel(0.99999, 0.0, 1.0, 0.01)
    rep = backward_limit_check(model, spec, 1.0)
    assert rep.flagged == [2]
    assert rep.factors[1] > 1e6


def test_source_regularity():
    spec = Spectrum([1.0, 4.0])
    assert source_regularity(SourceTerm.constant([1.0, 1.0]), spec, 0.5) == pytest.approx(math.sqrt(5.0))
    grid = TimeGrid.uniform(1.0, 2)
    f = SourceTerm.sampled(grid, [[0.0, 1.0, 2.0], [0.0, 0.0, 0.5]])
    assert source_regularity(f, spec, 0.5) == pytest.approx(math.sqrt(4.0 + 4 * 0.25))
    with pytest.raises(ValueError):
        source_regularity(f, spec, 1.0)

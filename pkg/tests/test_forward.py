"""Forward solver, the omega convolution and solution evaluation."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from subdiffusion_inverse import (
    FractionalModel,
    NearCriticalDenominator,
    OrthogonalityViolation,
    SourceTerm,
    SpectralVector,
    Spectrum,
    TimeGrid,
    classical_limit,
    dirichlet_spectrum,
    eval_solution,
    ml_a,
    ml_b,
    ml_kernel,
    omega,
    solve_forward,
    verify,
)

E_HALF_MINUS_ONE = 0.427583576155807  # e * erfc(1)


def nonlocal_residual(sol, model, phi):
    return np.max(np.abs(sol(model.xi0) - model.alpha * sol(0.0) - phi.coeffs))


def test_omega_zero_and_constant():
    lam = np.array([1.0, 4.0, 30.0])
    assert np.all(omega(0.5, lam, np.zeros(3), 0.7) == 0.0)
    assert np.allclose(omega(0.5, lam, [2.0, -1.0, 0.5], 0.7),
                       np.array([2.0, -1.0, 0.5]) * ml_a(0.5, lam, 0.7), rtol=0, atol=1e-15)


def test_omega_classical_exponential():
    # rho = 1: int_0^t e^{-eta} e^{-(t-eta)} d eta = t e^{-t}
    grid = TimeGrid.uniform(2.0, 2000)
    f = SourceTerm.sampled(grid, np.exp(-grid.nodes)[None, :])
    for t in (0.3, 1.0, 2.0):
        assert omega(1.0, 1.0, f, t) == pytest.approx(t * math.exp(-t), abs=1e-7)


@pytest.mark.parametrize("rho, lam", [(0.3, 2.0), (0.6, 10.0)])
def test_omega_sampled_matches_adaptive_quadrature(rho, lam):
    t = 0.8
    ref, _ = quad(lambda s: ml_kernel(rho, lam, s ** (1 / rho)) * s ** (1 / rho - 1) / rho
                  * math.cos(3 * (t - s ** (1 / rho))), 0.0, t**rho, epsabs=1e-14, limit=200)
    grid = TimeGrid.uniform(1.0, 1024)
    f = SourceTerm.from_function(grid, lambda s: [math.cos(3 * s)])
    assert omega(rho, lam, f, t, panels=1024) == pytest.approx(ref, abs=1e-6)


def test_omega_sampled_second_order_in_grid():
    rho, lam, t = 0.5, 3.0, 0.9
    ref, _ = quad(lambda s: ml_kernel(rho, lam, s**2) * 2 * s * math.cos(3 * (t - s**2)),
                  0.0, t**rho, epsabs=1e-14, limit=200)
    errs = []
    for m in (64, 128, 256):
        grid = TimeGrid.uniform(1.0, m)
        f = SourceTerm.from_function(grid, lambda s: [math.cos(3 * s)])
        errs.append(abs(omega(rho, lam, f, t, panels=4096) - ref))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.3), orders


def test_omega_outside_samples():
    grid = TimeGrid.uniform(1.0, 10)
    f = SourceTerm.sampled(grid, np.ones((1, 11)))
    with pytest.raises(ValueError):
        omega(0.5, 1.0, f, 1.5)
    with pytest.raises(ValueError):
        omega(0.5, 1.0, 1.0, -0.1)


def test_zero_data_gives_zero_solution():
    spec = dirichlet_spectrum(6)
    model = FractionalModel(0.5, 0.3, 1.0, 1.0)
    sol = solve_forward(model, spec, None, SpectralVector.zeros(6))
    for t in (0.0, 0.4, 1.0):
        assert np.all(sol(t) == 0.0)


def test_single_mode_closed_form():
    model = FractionalModel(0.5, 2.0, 1.0, 1.0)
    sol = solve_forward(model, Spectrum([1.0]), None, SpectralVector([1.0]))
    scale = 1.0 / (E_HALF_MINUS_ONE - 2.0)
    assert sol(0.0)[0] == pytest.approx(scale, rel=1e-13)
    assert sol(1.0)[0] == pytest.approx(E_HALF_MINUS_ONE * scale, rel=1e-13)
    assert sol(1.0)[0] - 2.0 * sol(0.0)[0] == pytest.approx(1.0, abs=1e-13)


def test_critical_free_coefficient_family():
    spec = dirichlet_spectrum(6)
    rho, xi0 = 0.5, 1.0
    alpha = ml_b(rho, spec.eigenvalues[2], xi0)
    model = FractionalModel(rho, alpha, 1.0, xi0)
    phi = SpectralVector([1.0, 0.5, 0.0, 0.2, 0.0, 0.1])
    f = SpectralVector([0.3, 0.0, 0.0, 1.0, 0.0, 0.0])
    sols = [solve_forward(model, spec, f, phi, {3: b}) for b in (5.0, -3.0)]
    for sol, b in zip(sols, (5.0, -3.0)):
        assert sol.free_modes == {3: b}
        assert sol(0.0)[2] == b
        rep = verify(sol, model, spec, f, phi)
        assert rep.nonlocal_residual <= 1e-10 * max(1.0, abs(b))
        assert rep.relative_equation_residual <= 1e-2
    diff = sols[0](0.6) - sols[1](0.6)
    assert np.all(diff[[0, 1, 3, 4, 5]] == 0.0) and diff[2] != 0.0


def test_critical_default_is_zero_and_stray_free_modes_rejected():
    spec = dirichlet_spectrum(4)
    alpha = ml_b(0.5, spec.eigenvalues[1], 1.0)
    model = FractionalModel(0.5, alpha, 1.0, 1.0)
    sol = solve_forward(model, spec, None, SpectralVector([1.0, 0.0, 1.0, 1.0]))
    assert sol.free_modes == {2: 0.0}
    with pytest.raises(ValueError):
        solve_forward(model, spec, None, SpectralVector.zeros(4), {1: 2.0})


def test_orthogonality_violations():
    spec = dirichlet_spectrum(4)
    alpha = ml_b(0.5, spec.eigenvalues[1], 1.0)
    model = FractionalModel(0.5, alpha, 1.0, 1.0)
    with pytest.raises(OrthogonalityViolation) as err:
        solve_forward(model, spec, None, SpectralVector([0.0, 1e-3, 0.0, 0.0]))
    assert err.value.modes == (2,) and err.value.exit_code == 3
    grid = TimeGrid.uniform(1.0, 8)
    vals = np.zeros((4, 9))
    vals[1, 5] = 1.0
    with pytest.raises(OrthogonalityViolation):
        solve_forward(model, spec, SourceTerm.sampled(grid, vals), SpectralVector.zeros(4))


def test_near_critical_guard():
    spec = dirichlet_spectrum(4)
    b2 = ml_b(0.5, spec.eigenvalues[1], 1.0)
    model = FractionalModel(0.5, b2 * (1 + 5e-10), 1.0, 1.0)
    from subdiffusion_inverse import critical_set

    # a critical set computed with a tighter band misses mode 2
    tight = critical_set(model, spec, eps_crit=1e-12)
    assert len(tight) == 0
    with pytest.raises(NearCriticalDenominator) as err:
        solve_forward(model, spec, None, SpectralVector([1.0, 0.0, 0.0, 0.0]), critical=tight)
    assert err.value.mode == 2


def test_eval_solution_and_range():
    spec = dirichlet_spectrum(3)
    model = FractionalModel(0.4, 0.5, 2.0, 1.5)
    sol = solve_forward(model, spec, SpectralVector([1.0, 2.0, 3.0]), SpectralVector([0.1, 0.2, 0.3]))
    assert np.array_equal(eval_solution(sol, 0.0).coeffs, sol.amplitudes)
    assert np.allclose(eval_solution(sol, 1.5).coeffs - 0.5 * sol.amplitudes, [0.1, 0.2, 0.3], atol=1e-14)
    with pytest.raises(ValueError):
        sol(2.5)
    with pytest.raises(ValueError):
        sol(-0.1)


def test_time_dependent_evaluation_self_convergence():
    spec = dirichlet_spectrum(3)
    model = FractionalModel(0.6, 0.4, 1.0, 1.0)
    phi = SpectralVector([1.0, -0.5, 0.25])

    def solution_at(m):
        grid = TimeGrid.uniform(1.0, m)
        f = SourceTerm.from_function(grid, lambda t: np.array([1.0, 2.0, -1.0]) * math.cos(4 * t))
        return solve_forward(model, spec, f, phi, panels=2048)(0.7)

    u1, u2, u3 = solution_at(32), solution_at(64), solution_at(128)
    order = math.log2(np.max(np.abs(u1 - u2)) / np.max(np.abs(u2 - u3)))
    assert order == pytest.approx(2.0, abs=0.3)


def _random_problem(seed, n=6, time_dependent=False):
    rng = np.random.default_rng(seed)
    phi = SpectralVector(rng.standard_normal(n))
    if time_dependent:
        grid = TimeGrid.uniform(1.0, 64)
        amp, rate = rng.standard_normal(n), rng.uniform(0, 2, n)
        f = SourceTerm.sampled(grid, amp[:, None] * np.exp(-rate[:, None] * grid.nodes))
    else:
        f = SourceTerm.constant(rng.standard_normal(n))
    return f, phi


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([0.3, 0.5, 0.8]), st.sampled_from([0.2, 0.9, 1.5, -1.0]),
       st.booleans())
def test_linearity(seed, rho, alpha, time_dependent):
    spec = dirichlet_spectrum(6)
    model = FractionalModel(rho, alpha, 1.0, 0.8)
    f1, p1 = _random_problem(seed, time_dependent=time_dependent)
    f2, p2 = _random_problem(seed + 1, time_dependent=time_dependent)
    s12 = solve_forward(model, spec, f1 + f2, p1 + p2, panels=128)
    s1 = solve_forward(model, spec, f1, p1, panels=128)
    s2 = solve_forward(model, spec, f2, p2, panels=128)
    for t in (0.0, 0.35, 1.0):
        assert np.allclose(s12(t), s1(t) + s2(t), rtol=0, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.05, 0.95), st.floats(-3.0, 3.0), st.floats(0.1, 1.0))
def test_nonlocal_condition_holds(seed, rho, alpha, xi0):
    spec = dirichlet_spectrum(8)
    model = FractionalModel(rho, alpha, 1.0, xi0)
    f, phi = _random_problem(seed, n=8)
    try:
        sol = solve_forward(model, spec, f, phi)
    except NearCriticalDenominator:
        return
    scale = max(1.0, float(np.max(np.abs(sol.amplitudes))))
    assert nonlocal_residual(sol, model, phi) <= 1e-10 * scale


def test_classical_limit():
    lam, f, phi, alpha, xi0, T = 1.0, 0.7, 0.4, 0.3, 1.0, 2.0
    model = FractionalModel(0.999, alpha, T, xi0)
    sol = solve_forward(model, Spectrum([lam]), SpectralVector([f]), SpectralVector([phi]))
    # rho = 1: c = (phi - f (1 - e^{-xi0}) / lam) / (e^{-xi0} - alpha)
    c0 = (phi - f * (1 - math.exp(-lam * xi0)) / lam) / (math.exp(-lam * xi0) - alpha)
    assert sol(T)[0] == pytest.approx(classical_limit(lam, f, c0, T), abs=1e-2)


def test_source_term_validation():
    grid = TimeGrid.uniform(1.0, 4)
    with pytest.raises(ValueError):
        SourceTerm.sampled(grid, np.ones((2, 4)))
    with pytest.raises(ValueError):
        SourceTerm.constant([1.0, np.inf])
    with pytest.raises(ValueError):
        TimeGrid([0.0, 0.5, 0.5, 1.0])
    with pytest.raises(ValueError):
        TimeGrid([0.1, 0.5])
    assert TimeGrid.uniform(1.0, 4).is_uniform

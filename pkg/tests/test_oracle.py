import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given, settings, strategies as st

from phase_qubit import error
from phase_qubit.hamiltonians import TimeDependentGenerator, build_lab_frame, build_rwa, build_zero_drive
from phase_qubit.oracle import IntegratorConfig, expm_const, integrate, sin_over_half, solve, solve_constant
from phase_qubit.params import QubitParams
from phase_qubit.propagators import Mode, evolve
from phase_qubit.state import QubitState, populations

from conftest import SQRT_HALF, spiral_params

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_generator(rng, scale=1.0):
    return scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))

def random_state(rng):
    u = rng.normal(size=2) + 1j * rng.normal(size=2)
    return QubitState.from_array(u / np.linalg.norm(u))

def dissipative_generator(rng):
    h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = 0.5 * (h + h.conj().T)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return h - 0.5j * (a @ a.conj().T)


def test_zero_generator_leaves_state_unchanged():
    gen = TimeDependentGenerator.constant(np.zeros((2, 2)))
    state = QubitState(0.6, 0.8j)
    assert integrate(gen, state, 0.0, 7.0) == state
    np.testing.assert_array_equal(expm_const(np.zeros((2, 2)), 3.0), np.eye(2))

def test_half_rabi_period_inverts_populations():
    rabi0 = 0.5
    gen = TimeDependentGenerator.constant(0.5 * rabi0 * SIGMA_X)
    state = integrate(gen, QubitState.ground(), 0.0, math.pi / rabi0)
    assert populations(state) == pytest.approx((1.0, 0.0), abs=1e-9)

def test_jordan_block_limit():
    gen = np.array([[0, 1], [0, 0]], dtype=complex)
    np.testing.assert_allclose(expm_const(gen, 2.5), np.array([[1, -2.5j], [0, 1]]), atol=1e-15)

def test_sin_over_half_is_continuous_at_zero():
    t = np.array([0.0, 1.0, 2.0])
    np.testing.assert_allclose(sin_over_half(1e-9, t), t, rtol=1e-15)
    np.testing.assert_allclose(sin_over_half(2.0, t), np.sin(t), rtol=1e-15)

def test_expm_matches_scipy():
    rng = np.random.default_rng(1)
    for _ in range(200):
        gen = random_generator(rng)
        t = rng.uniform(0, 3)
        np.testing.assert_allclose(expm_const(gen, t), scipy.linalg.expm(-1j * gen * t), rtol=1e-10, atol=1e-12)

def test_expm_over_a_grid():
    gen = random_generator(np.random.default_rng(2))
    times = np.linspace(0, 2, 5)
    stacked = expm_const(gen, times)
    assert stacked.shape == (5, 2, 2)
    for t, u in zip(times, stacked):
        np.testing.assert_allclose(u, expm_const(gen, t), atol=1e-15)

def test_expm_semigroup():
    rng = np.random.default_rng(4)
    for _ in range(200):
        gen = dissipative_generator(rng)
        t1, t2 = rng.uniform(0, 2, size=2)
        np.testing.assert_allclose(expm_const(gen, t1) @ expm_const(gen, t2), expm_const(gen, t1 + t2), atol=1e-10)

def test_expm_overflow_guard():
    gen = np.diag([0.0, 2.0j])
    with pytest.raises(error.PropagationOverflow):
        expm_const(gen, 1e3)

def test_integrate_matches_exact_exponential():
    rng = np.random.default_rng(6)
    cfg = IntegratorConfig()
    for _ in range(1000):
        gen = random_generator(rng, 0.5)
        initial = random_state(rng)
        t = rng.uniform(0, 2)
        exact = expm_const(gen, t) @ initial.as_array()
        numeric = integrate(TimeDependentGenerator.constant(gen), initial, 0.0, t, cfg).as_array()
        assert np.max(np.abs(numeric - exact)) <= 10 * cfg.rel_tol * max(1.0, np.max(np.abs(exact)))

def test_tightening_converges():
    rng = np.random.default_rng(8)
    cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10)
    fine = cfg.tightened(100)
    worse = 0
    cases = 200
    for _ in range(cases):
        gen = random_generator(rng, 0.5)
        initial = random_state(rng)
        t = rng.uniform(0.5, 2)
        exact = expm_const(gen, t) @ initial.as_array()
        coarse_err = np.max(np.abs(integrate(TimeDependentGenerator.constant(gen), initial, 0.0, t, cfg).as_array() - exact))
        fine_err = np.max(np.abs(integrate(TimeDependentGenerator.constant(gen), initial, 0.0, t, fine).as_array() - exact))
        if fine_err > coarse_err and fine_err > 1e-14:
            worse += 1
    assert worse <= 0.05 * cases

def test_solve_matches_scipy_on_the_lab_frame():
    params = QubitParams(omega1=6.0, gamma0=0.01, gamma1=0.08, rabi0=0.4, drive_freq=5.8, drive_phase=0.3)
    gen = build_lab_frame(params)
    initial = QubitState(SQRT_HALF, 1j * SQRT_HALF)
    times = np.linspace(0, 20, 41)
    ours = solve(gen, initial, times, IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13))
    reference = scipy.integrate.solve_ivp(lambda t, y: -1j * (gen(t) @ y), (0, 20), initial.as_array(),
                                          method='DOP853', t_eval=times, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(ours, reference.y.T, atol=1e-8)

def test_solve_agrees_with_single_integrations():
    gen = TimeDependentGenerator.constant(dissipative_generator(np.random.default_rng(9)))
    times = np.array([0.0, 0.3, 1.1, 2.0])
    initial = QubitState.excited()
    grid = solve(gen, initial, times)
    for t, row in zip(times, grid):
        np.testing.assert_allclose(row, integrate(gen, initial, 0.0, t).as_array(), atol=1e-9)

def test_solve_constant_factors_out_the_phase(tight):
    gen = build_zero_drive(QubitParams(omega0=40.0, omega1=45.0, gamma0=0.01, gamma1=0.05))
    initial = QubitState(0.6, 0.8)
    times = np.linspace(0, 30, 16)
    exact = expm_const(gen, times) @ initial.as_array()
    np.testing.assert_allclose(solve_constant(gen, initial, times, tight), exact, atol=1e-9)

@given(st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_norm_never_grows_for_dissipative_generators(seed):
    rng = np.random.default_rng(seed)
    cfg = IntegratorConfig()
    gen = TimeDependentGenerator.constant(dissipative_generator(rng))
    norms = np.sum(np.abs(solve(gen, random_state(rng), np.linspace(0, 3, 31), cfg)) ** 2, axis=-1)
    assert np.all(np.diff(norms) <= 1e-9)

def test_rwa_is_valid_far_from_the_drive_frequency():
    # ω₁₀/Ω₀ = 62.5; compare populations, the frames differ by a rotation
    params = spiral_params()
    assert params.omega10 / params.rabi0 == pytest.approx(62.5)
    initial = QubitState(-1j * math.sin(math.pi / 8), math.cos(math.pi / 8))
    times = np.linspace(0, 2 * 2 * math.pi / params.rabi0, 51)
    lab = np.abs(evolve(initial, params, times, Mode.LAB_FRAME)) ** 2
    rwa = np.abs(evolve(initial, params, times, Mode.RWA)) ** 2
    assert np.max(np.abs(lab - rwa)) < 5e-2

def test_rwa_generator_constant_matches_closed_form(tight):
    params = spiral_params()
    initial = QubitState.ground()
    times = np.linspace(0, 30, 31)
    numeric = solve(TimeDependentGenerator.constant(build_rwa(params)), initial, times, tight)
    np.testing.assert_allclose(numeric, evolve(initial, params, times, Mode.RWA), atol=1e-9)

def test_step_limit():
    gen = TimeDependentGenerator.constant(random_generator(np.random.default_rng(10)))
    with pytest.raises(error.StepLimitExceeded):
        integrate(gen, QubitState.ground(), 0.0, 100.0, IntegratorConfig(max_steps=3))

def test_backwards_integration_is_rejected():
    gen = TimeDependentGenerator.constant(np.eye(2))
    with pytest.raises(error.InvalidTimeGrid):
        integrate(gen, QubitState.ground(), 2.0, 1.0)
    with pytest.raises(error.InvalidTimeGrid):
        solve(gen, QubitState.ground(), np.array([1.0, 2.0]), t0=1.5)

def test_non_finite_generator_is_reported():
    gen = TimeDependentGenerator(evaluate=lambda t: np.full((2, 2), np.nan if t > 0 else 0.0), period=1.0)
    with pytest.raises(error.IntegrationError):
        integrate(gen, QubitState.ground(), 0.0, 1.0)

@pytest.mark.parametrize('kwargs', [
    dict(rel_tol=0.0),
    dict(abs_tol=-1.0),
    dict(max_steps=0),
    dict(max_step=0.0),
    dict(initial_step=-1.0),
])
def test_config_validation(kwargs):
    with pytest.raises(error.InvalidParams):
        IntegratorConfig(**kwargs)

def test_tightened_config():
    cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10, max_steps=500).tightened(100)
    assert cfg.rel_tol == pytest.approx(1e-10)
    assert cfg.abs_tol == pytest.approx(1e-12)
    assert cfg.max_steps == 500

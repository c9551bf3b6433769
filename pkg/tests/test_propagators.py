import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phase_qubit import error
from phase_qubit.hamiltonians import build_zero_drive, eigenvalue_splitting
from phase_qubit.oracle import expm_const, solve_constant
from phase_qubit.params import QubitParams, complex_rabi_frequency
from phase_qubit.propagators import (Mode, PropagationRequest, deviation_F, double_exponential_escape,
                                     escape_probability, evolve, printed_rabi_frequency,
                                     printed_zero_drive_amplitudes, propagate, rwa_amplitudes, rwa_populations,
                                     upper_population_special, weak_coupling_state, zero_drive_amplitudes)
from phase_qubit.state import QubitState, populations

from conftest import SQRT_HALF

FIG3_INITIAL = QubitState(0.291, 0.956).normalized()
SUPERPOSITION = QubitState(SQRT_HALF, SQRT_HALF)

rate = st.floats(min_value=0.0, max_value=0.5)
amplitude = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


def random_rwa_params(rng):
    omega1 = rng.uniform(2.0, 3.0)
    return QubitParams(omega0=0.0, omega1=omega1, gamma0=rng.uniform(0, 0.5), gamma1=rng.uniform(0, 2),
                       rabi0=rng.uniform(0, 2), drive_freq=omega1 - rng.uniform(-2, 2),
                       drive_phase=rng.uniform(-math.pi, math.pi))

def random_state(rng):
    u = rng.normal(size=2) + 1j * rng.normal(size=2)
    return QubitState.from_array(u / np.linalg.norm(u))


@pytest.mark.parametrize('mode', ['rwa', 'zero-drive', 'weak', 'numeric', 'lab-frame'])
def test_time_zero_is_identity(mode, rabi):
    amplitudes = evolve(FIG3_INITIAL, rabi, np.array([0.0]), mode)
    np.testing.assert_allclose(amplitudes[0], FIG3_INITIAL.as_array(), atol=1e-15)

def test_resonant_rabi_flop_without_decay():
    params = QubitParams.from_rwa(rabi0=0.3, detuning=0.0, gamma_mean=0.0)
    times = np.linspace(0, 40, 81)
    rho11, rho00 = rwa_populations(QubitState.ground(), params, times)
    np.testing.assert_allclose(rho11, np.sin(0.15 * times) ** 2, atol=1e-14)
    np.testing.assert_allclose(rho00, np.cos(0.15 * times) ** 2, atol=1e-14)

def test_undriven_upper_level_decays_at_its_own_rate():
    params = QubitParams.from_rwa(rabi0=0.0, detuning=0.02, gamma_mean=0.03, gamma0=0.01)
    times = np.linspace(0, 100, 11)
    rho11, rho00 = rwa_populations(QubitState.excited(), params, times)
    np.testing.assert_allclose(rho11, np.exp(-params.gamma1 * times), rtol=1e-12)
    np.testing.assert_allclose(rho00, 0.0, atol=1e-30)

def test_rabi_regime_matches_numeric_propagation(rabi, tight):
    times = np.array([500.0, 1000.0, 2000.0])
    closed = evolve(FIG3_INITIAL, rabi, times, 'rwa')
    numeric = evolve(FIG3_INITIAL, rabi, times, 'numeric', tight)
    np.testing.assert_allclose(closed, numeric, rtol=0, atol=1e-9)

def test_random_rwa_cases_match_numeric_propagation(tight):
    rng = np.random.default_rng(3)
    for _ in range(1000):
        params = random_rwa_params(rng)
        initial = random_state(rng)
        t = rng.uniform(0, 3)
        closed = rwa_amplitudes(initial, params, t).as_array()
        numeric = evolve(initial, params, np.array([t]), 'numeric', tight)[0]
        assert np.max(np.abs(closed - numeric)) < 1e-9

def test_scalar_and_vector_results_agree(rabi):
    times = np.array([0.0, 123.0, 4567.0])
    rho11, rho00 = rwa_populations(FIG3_INITIAL, rabi, times)
    for t, r1, r0 in zip(times, rho11, rho00):
        assert populations(rwa_amplitudes(FIG3_INITIAL, rabi, t)) == pytest.approx((r1, r0), abs=1e-15)

def test_populations_are_consistent_with_amplitudes():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        params = random_rwa_params(rng)
        initial = random_state(rng)
        t = rng.uniform(0, 3)
        assert rwa_populations(initial, params, t) == pytest.approx(populations(rwa_amplitudes(initial, params, t)), abs=1e-12)

def test_special_case_matches_general_populations():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        params = random_rwa_params(rng)
        t = rng.uniform(0, 3)
        special = upper_population_special(params, t)
        general, _ = rwa_populations(QubitState.ground(), params, t)
        assert special == pytest.approx(general, abs=1e-12)

def test_special_case_first_maximum(rabi):
    assert upper_population_special(rabi, 0.0) == 0.0
    omega = complex_rabi_frequency(rabi)
    times = np.linspace(0, 600, 6001)
    rho11 = upper_population_special(rabi, times)
    peak = times[np.argmax(rho11)]
    assert peak == pytest.approx(math.pi / omega.real, rel=0.05)
    ceiling = rabi.rabi0 ** 2 / abs(omega) ** 2
    assert ceiling == pytest.approx(0.109, abs=2e-3)
    assert np.max(rho11) < ceiling

def test_semigroup_property(rabi):
    for t1, t2 in [(100.0, 250.0), (1000.0, 3000.0), (0.5, 0.25)]:
        direct = rwa_amplitudes(FIG3_INITIAL, rabi, t1 + t2).as_array()
        stepped = rwa_amplitudes(rwa_amplitudes(FIG3_INITIAL, rabi, t1), rabi, t2).as_array()
        np.testing.assert_allclose(stepped, direct, rtol=0, atol=1e-10)

@given(rate, rate, st.floats(min_value=0, max_value=2), st.floats(min_value=-2, max_value=2), amplitude, amplitude)
@settings(max_examples=200, deadline=None)
def test_norm_never_grows_and_escape_never_drops(g0, extra, rabi0, detuning, c1, c0):
    params = QubitParams.from_rwa(rabi0=rabi0, detuning=detuning, gamma_mean=g0 + extra, gamma0=g0)
    initial = QubitState(c1, c0)
    times = np.linspace(0, 10, 101)
    for mode in (Mode.RWA, Mode.ZERO_DRIVE, Mode.WEAK):
        norm2 = np.sum(np.abs(evolve(initial, params, times, mode)) ** 2, axis=-1)
        scale = max(initial.norm2, 1e-300)
        assert np.all(np.diff(norm2) <= 1e-13 * scale)

def test_overflow_is_reported_not_returned():
    params = QubitParams.from_rwa(rabi0=0.01, detuning=0.0, gamma_mean=1.0, gamma0=0.0)
    with pytest.raises(error.PropagationOverflow):
        rwa_amplitudes(QubitState.ground(), params, 1e4)

def test_zero_drive_without_coupling_is_decoupled(fast_readout):
    params = fast_readout.without_channel_coupling()
    times = np.linspace(0, 50, 11)
    amplitudes = evolve(SUPERPOSITION, params, times, Mode.ZERO_DRIVE)
    expected1 = SQRT_HALF * np.exp(-1j * params.omega1 * times - 0.5 * params.gamma1 * times)
    expected0 = SQRT_HALF * np.exp(-1j * params.omega0 * times - 0.5 * params.gamma0 * times)
    np.testing.assert_allclose(amplitudes[:, 0], expected1, rtol=1e-12)
    np.testing.assert_allclose(amplitudes[:, 1], expected0, rtol=1e-12)

def test_zero_drive_matches_numeric_propagation(fast_readout, tight):
    closed = zero_drive_amplitudes(SUPERPOSITION, fast_readout, 3.0).as_array()
    propagator = expm_const(build_zero_drive(fast_readout), 3.0)
    np.testing.assert_allclose(closed, propagator @ SUPERPOSITION.as_array(), atol=1e-15)
    numeric = solve_constant(build_zero_drive(fast_readout), SUPERPOSITION, np.array([3.0]), tight)[0]
    assert np.max(np.abs(closed - numeric)) < 1e-9

def test_random_zero_drive_cases_match_numeric_propagation(tight):
    rng = np.random.default_rng(11)
    for _ in range(1000):
        gamma0, gamma1 = rng.uniform(0, 0.5, size=2)
        params = QubitParams(omega0=rng.uniform(-1, 1), omega1=rng.uniform(2, 6), gamma0=gamma0, gamma1=gamma1,
                             gamma01=rng.uniform(0, 1) * math.sqrt(gamma0 * gamma1))
        initial = random_state(rng)
        t = rng.uniform(0, 3)
        closed = zero_drive_amplitudes(initial, params, t).as_array()
        numeric = solve_constant(build_zero_drive(params), initial, np.array([t]), tight)[0]
        assert np.max(np.abs(closed - numeric)) < 1e-9

def test_zero_drive_override_of_channel_coupling(fast_readout):
    coupled = zero_drive_amplitudes(SUPERPOSITION, fast_readout.without_channel_coupling(), 2.0,
                                    gamma01=fast_readout.gamma01)
    assert coupled == zero_drive_amplitudes(SUPERPOSITION, fast_readout, 2.0)

def test_printed_zero_drive_formula_equals_exact_propagation(fast_readout):
    # with Γ₀₁² = Γ₀Γ₁ the printed splitting is the exact one
    exact_split = eigenvalue_splitting(build_zero_drive(fast_readout))
    assert abs(printed_rabi_frequency(fast_readout) - exact_split) < 1e-12 * abs(exact_split)
    times = np.linspace(0, 50, 101)
    printed = printed_zero_drive_amplitudes(SUPERPOSITION, fast_readout, times)
    exact = evolve(SUPERPOSITION, fast_readout, times, Mode.ZERO_DRIVE)
    np.testing.assert_allclose(printed, exact, rtol=0, atol=1e-10)
    assert isinstance(printed_zero_drive_amplitudes(SUPERPOSITION, fast_readout, 1.0), QubitState)

def test_weak_coupling_phase_and_decay(fast_readout):
    for t in (0.0, 0.7, 13.0):
        state = weak_coupling_state(QubitState.excited(), fast_readout, t)
        assert state.c1 == pytest.approx(np.exp(-1j * fast_readout.omega1 * t) * math.exp(-0.5 * fast_readout.gamma1 * t),
                                         abs=1e-15)
        assert state.c0 == 0

def test_weak_coupling_tracks_exact_populations(fast_readout):
    # ω₁₀/Γ₁ = 100π
    times = np.linspace(0, 5 / fast_readout.gamma1, 501)
    weak = np.abs(evolve(SUPERPOSITION, fast_readout, times, Mode.WEAK)) ** 2
    exact = np.abs(evolve(SUPERPOSITION, fast_readout, times, Mode.ZERO_DRIVE)) ** 2
    np.testing.assert_allclose(weak, exact, rtol=1e-2)
    weak_escape = escape_probability(SUPERPOSITION, fast_readout, times, Mode.WEAK)
    exact_escape = escape_probability(SUPERPOSITION, fast_readout, times, Mode.ZERO_DRIVE)
    assert np.max(np.abs(weak_escape - exact_escape)) < 1e-2

def test_escape_starts_at_zero(rabi):
    for mode in Mode:
        assert escape_probability(FIG3_INITIAL, rabi, 0.0, mode) == pytest.approx(0.0, abs=1e-15)

def test_double_exponential_limits(fast_readout):
    times = np.linspace(0, 50, 51)
    np.testing.assert_allclose(double_exponential_escape(1.0, fast_readout, times), 1 - np.exp(-0.1 * times), atol=1e-15)
    np.testing.assert_allclose(double_exponential_escape(0.0, fast_readout, times),
                               1 - np.exp(-fast_readout.gamma0 * times), atol=1e-15)
    with pytest.raises(error.InvalidState):
        double_exponential_escape(1.2, fast_readout, times)

def test_double_exponential_is_exact_without_channel_coupling():
    rng = np.random.default_rng(17)
    for _ in range(200):
        params = QubitParams(omega1=rng.uniform(1, 40), gamma0=rng.uniform(0, 0.05), gamma1=rng.uniform(0, 0.3), gamma01=0.0)
        initial = random_state(rng)
        times = np.linspace(0, 30, 31)
        escape = escape_probability(initial, params, times, Mode.ZERO_DRIVE)
        expected = double_exponential_escape(abs(initial.c1) ** 2, params, times)
        np.testing.assert_allclose(escape, expected, rtol=0, atol=1e-12)

def test_double_exponential_with_channel_coupling(fast_readout):
    times = np.linspace(0, 50, 501)
    escape = escape_probability(SUPERPOSITION, fast_readout, times, Mode.ZERO_DRIVE)
    assert np.all(np.diff(escape) >= -1e-15)
    assert np.max(np.abs(escape - double_exponential_escape(0.5, fast_readout, times))) <= 2e-3

def test_deviation_for_superposition(fast_readout):
    times = np.linspace(0, 3, 601)
    deviation = deviation_F(SUPERPOSITION, fast_readout, times)
    assert deviation[0] == pytest.approx(0.0, abs=1e-15)
    assert 1e-4 < np.max(np.abs(deviation)) < 1e-3

def test_deviation_for_upper_level(fast_readout):
    times = np.linspace(0, 3, 601)
    assert np.max(np.abs(deviation_F(QubitState.excited(), fast_readout, times))) <= 1e-3

def test_deviation_vanishes_without_lower_tunneling(fast_readout):
    params = fast_readout.replace(gamma0=0.0, gamma01=0.0)
    np.testing.assert_array_equal(deviation_F(SUPERPOSITION, params, np.linspace(0, 3, 31)), 0.0)

def test_deviation_ignores_stored_channel_coupling(fast_readout):
    times = np.linspace(0, 3, 31)
    np.testing.assert_array_equal(deviation_F(SUPERPOSITION, fast_readout, times),
                                  deviation_F(SUPERPOSITION, fast_readout.without_channel_coupling(), times))

def test_deviation_undefined_without_upper_amplitude(fast_readout):
    with pytest.raises(error.UndefinedDeviation):
        deviation_F(QubitState.ground(), fast_readout, np.linspace(0, 3, 31))

def test_propagation_request(rabi):
    request = PropagationRequest(FIG3_INITIAL, rabi, [0.0, 10.0, 20.0], mode='rwa-closed-form')
    assert request.mode is Mode.RWA
    np.testing.assert_array_equal(propagate(request), evolve(FIG3_INITIAL, rabi, request.t_grid))
    with pytest.raises(error.InvalidTimeGrid):
        PropagationRequest(FIG3_INITIAL, rabi, [-1.0, 0.0])
    with pytest.raises(error.InvalidTimeGrid):
        PropagationRequest(FIG3_INITIAL, rabi, [1.0, 1.0])
    with pytest.raises(error.InvalidParams):
        Mode.parse('euler')

"""Closed-form propagation of the two-level non-Hermitian dynamics.

All closed forms are vectorised over time: public scalar operations take a
single time in ns and return a QubitState (or floats), while `evolve` returns
an (n, 2) amplitude array for a whole grid in any Mode.

The sin(Ωt/2)/Ω factors are evaluated through `oracle.sin_over_half`, which
continues them to the exceptional point Ω = 0.
"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from phase_qubit import error
from phase_qubit.hamiltonians import build_lab_frame, build_rwa, build_zero_drive
from phase_qubit.oracle import IntegratorConfig, check_overflow, expm_const, sin_over_half, solve, solve_constant
from phase_qubit.params import QubitParams, complex_detuning, complex_rabi_frequency, principal_sqrt
from phase_qubit.state import QubitState, check_time_grid

logger = logging.getLogger(__name__)


class Mode(enum.Enum):
    RWA = 'rwa'
    ZERO_DRIVE = 'zero-drive'
    WEAK = 'weak'
    NUMERIC = 'numeric'
    LAB_FRAME = 'lab-frame'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace('_', '-')
        key = _MODE_ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise error.InvalidParams('Unknown propagation mode: {!r}. (HINT: one of {})'.format(value, ', '.join(m.value for m in cls)))

_MODE_ALIASES = {
    'rwa-closed-form': 'rwa',
    'zero-drive-closed-form': 'zero-drive',
    'weak-coupling-limit': 'weak',
    'weak-coupling': 'weak',
    'lab': 'lab-frame',
}


@dataclass(frozen=True, eq=False)
class PropagationRequest(object):
    initial: QubitState
    params: QubitParams
    t_grid: np.ndarray
    mode: Mode = Mode.RWA
    cfg: Optional[IntegratorConfig] = None

    def __post_init__(self):
        t_grid = check_time_grid(self.t_grid)
        if t_grid[0] < 0:
            raise error.InvalidTimeGrid('Time grid must start at t >= 0, got {}'.format(t_grid[0]))
        object.__setattr__(self, 't_grid', t_grid)
        object.__setattr__(self, 'mode', Mode.parse(self.mode))


def _scalar(values):
    values = np.asarray(values)
    return values.item() if values.ndim == 0 else values

def _state(amplitudes):
    return QubitState(complex(amplitudes[..., 0]), complex(amplitudes[..., 1]))

# ----------------------------------------------------------------------------
# Rotating wave approximation

def _rwa_array(initial, params, times):
    t = np.asarray(times, dtype=float)
    z = complex_detuning(params)
    omega = complex_rabi_frequency(params)
    check_overflow(omega, t)

    lambda_tilde = complex(params.lambda0, -params.gamma_mean)
    envelope = np.exp(-0.5j * lambda_tilde * t)
    cos_part = np.cos(0.5 * omega * t)
    # sin(Ωt/2)/Ω, so that cosθ·sin = z·sin_part and sinθ·sin = Ω₀·sin_part
    sin_part = 0.5 * sin_over_half(omega, t)
    phase = np.exp(-1j * params.drive_phase)
    rabi0 = params.rabi0
    c1, c0 = initial.c1, initial.c0

    amp1 = envelope * ((cos_part - 1j * z * sin_part) * c1 - 1j * phase * rabi0 * sin_part * c0)
    amp0 = envelope * ((cos_part + 1j * z * sin_part) * c0 - 1j * np.conj(phase) * rabi0 * sin_part * c1)
    return np.stack([amp1, amp0], axis=-1)

def rwa_amplitudes(initial, params, t):
    """(C1(t), C0(t)) under the RWA generator, with λ̃₀ = ω₀ + ω₁ − iΓ."""
    return _state(_rwa_array(initial, params, t))

def rwa_populations(initial, params, t):
    """(ρ11(t), ρ00(t)) under the RWA generator; t may be an array."""
    amplitudes = _rwa_array(initial, params, t)
    return _scalar(np.abs(amplitudes[..., 0]) ** 2), _scalar(np.abs(amplitudes[..., 1]) ** 2)

def upper_population_special(params, t):
    """ρ11(t) = e^{−Γt} (Ω₀²/|Ω|²) |sin(Ωt/2)|², the C1(0) = 0 case."""
    t = np.asarray(t, dtype=float)
    omega = complex_rabi_frequency(params)
    check_overflow(omega, t)
    sin_part = 0.5 * sin_over_half(omega, t)
    return _scalar(np.exp(-params.gamma_mean * t) * params.rabi0 ** 2 * np.abs(sin_part) ** 2)

# ----------------------------------------------------------------------------
# Zero drive

def _zero_drive_array(initial, params, times, gamma01=None):
    propagator = expm_const(build_zero_drive(params, gamma01), np.asarray(times, dtype=float))
    return propagator @ initial.as_array()

def zero_drive_amplitudes(initial, params, t, gamma01=None):
    """Exact propagation of the zero-drive generator (Γ₀₁ from params unless overridden)."""
    return _state(_zero_drive_array(initial, params, t, gamma01))

def printed_rabi_frequency(params):
    """Ω = sqrt(ω₁₀² − 2iω₁₀(Γ − Γ₀) − Γ²) as printed for the zero-drive solution.

    Equals the exact eigenvalue splitting only when Γ₀₁² = Γ₀Γ₁.
    """
    w, g, g0 = params.omega10, params.gamma_mean, params.gamma0
    return principal_sqrt(w * w - 2j * w * (g - g0) - g * g)

def printed_zero_drive_amplitudes(initial, params, t):
    """Verbatim transcription of the printed zero-drive amplitudes.

    Used only to compare the published coefficients against the exact
    propagation; the library itself never relies on it.
    """
    t = np.asarray(t, dtype=float)
    omega = printed_rabi_frequency(params)
    if omega == 0:
        raise error.ExceptionalPoint('Printed zero-drive Rabi frequency vanishes for {}'.format(params))
    check_overflow(omega, t)
    lambda_tilde = complex(params.lambda0, -params.gamma_mean)
    envelope = np.exp(-0.5j * lambda_tilde * t)
    cos_part = np.cos(0.5 * omega * t)
    sin_part = np.sin(0.5 * omega * t)
    kappa = complex(params.gamma_mean - params.gamma0, params.omega10) / omega
    cross = params.gamma01 / omega
    c1, c0 = initial.c1, initial.c0

    amp1 = envelope * ((cos_part - kappa * sin_part) * c1 - cross * sin_part * c0)
    amp0 = envelope * ((cos_part + kappa * sin_part) * c0 - cross * sin_part * c1)
    amplitudes = np.stack([amp1, amp0], axis=-1)
    return _state(amplitudes) if t.ndim == 0 else amplitudes

def _weak_array(initial, params, times):
    t = np.asarray(times, dtype=float)
    amp1 = np.exp(complex(-0.5 * params.gamma1, -params.omega1) * t) * initial.c1
    amp0 = np.exp(complex(-0.5 * params.gamma0, -params.omega0) * t) * initial.c0
    return np.stack([amp1, amp0], axis=-1)

def weak_coupling_state(initial, params, t):
    """Decoupled channels: C_n(t) = e^{−iω_n t} e^{−Γ_n t/2} C_n(0), valid for ω₁₀ ≫ Γ₁."""
    return _state(_weak_array(initial, params, t))

# ----------------------------------------------------------------------------
# Batch evaluation

def evolve(initial, params, times, mode=Mode.RWA, cfg=None):
    """Amplitudes at each of `times` (ns, from t = 0) as an (n, 2) array."""
    mode = Mode.parse(mode)
    times = np.asarray(times, dtype=float)
    if mode is Mode.RWA:
        return _rwa_array(initial, params, times)
    if mode is Mode.ZERO_DRIVE:
        return _zero_drive_array(initial, params, times)
    if mode is Mode.WEAK:
        return _weak_array(initial, params, times)
    if mode is Mode.NUMERIC:
        amplitudes = solve_constant(build_rwa(params), initial, np.atleast_1d(times), cfg, 'rwa')
    else:
        amplitudes = solve(build_lab_frame(params), initial, np.atleast_1d(times), cfg)
    return amplitudes.reshape(times.shape + (2,))

def propagate(request):
    return evolve(request.initial, request.params, request.t_grid, request.mode, request.cfg)

# ----------------------------------------------------------------------------
# Escape probability and channel interaction

def escape_probability(initial, params, t, mode=Mode.RWA, cfg=None):
    """P_esc(t) = 1 − ρ11(t) − ρ00(t) from the selected backend (raw, unclipped)."""
    amplitudes = evolve(initial, params, t, mode, cfg)
    return _scalar(1.0 - np.sum(np.abs(amplitudes) ** 2, axis=-1))

def double_exponential_escape(rho11_0, params, t):
    """P_esc(t) = 1 − ρ11(0)e^{−Γ₁t} − (1 − ρ11(0))e^{−Γ₀t}."""
    if not 0.0 <= rho11_0 <= 1.0:
        raise error.InvalidState('rho11(0) must lie in [0, 1], got {}'.format(rho11_0))
    t = np.asarray(t, dtype=float)
    return _scalar(1.0 - rho11_0 * np.exp(-params.gamma1 * t) - (1.0 - rho11_0) * np.exp(-params.gamma0 * t))

def deviation_F(initial, params, t):
    """F(t) = (ρ11(Γ₀₁, t) − ρ11(0, t)) / ρ11(0, t) under zero drive.

    ρ11(Γ₀₁, t) uses Γ₀₁ = sqrt(Γ₀Γ₁) whatever params.gamma01 holds.
    """
    t = np.asarray(t, dtype=float)
    coupled = _zero_drive_array(initial, params, t, math.sqrt(params.gamma0 * params.gamma1))
    reference = _zero_drive_array(initial, params, t, 0.0)
    rho_coupled = np.abs(coupled[..., 0]) ** 2
    rho_reference = np.abs(reference[..., 0]) ** 2
    if np.any(rho_reference <= 0):
        raise error.UndefinedDeviation('Reference population rho11(0, t) vanishes (C1(0) = {}). '
                                       '(HINT: F(t) needs an initial state with C1(0) != 0)'.format(initial.c1))
    return _scalar((rho_coupled - rho_reference) / rho_reference)

"""Builders for the registered parameter regimes.

Each builder returns a Scenario; the quoted values each preset must reproduce
are listed with its registration in `phase_qubit/scenarios/__init__.py`.
"""
import logging
import math

from phase_qubit.configuration import DEFAULT_OMEGA10
from phase_qubit.params import QubitParams, to_canonical
from phase_qubit.propagators import Mode
from phase_qubit.scenarios.registration import Scenario, TimeGrid
from phase_qubit.state import BlochState, QubitState

logger = logging.getLogger(__name__)

SQRT_HALF = math.sqrt(0.5)

# Fast readout: Γ₁ = 0.1 ns⁻¹ with Γ₁/Γ₀ = 150
FAST_READOUT_GAMMA1 = 0.1
FAST_READOUT_RATIO = 150.0


def bloch_spiral(omega10=DEFAULT_OMEGA10, grid='0:60:601'):
    """Resonant drive at Ω₀/2π = 80 MHz, Γ = 0.035 ns⁻¹, φ = −π/2.

    Tunneling from |0> is taken as frozen out (Γ₀ = 0); the initial state is
    the preimage of n(0) = (0, 1, −1)/√2.
    """
    params = QubitParams.from_rwa(
        rabi0=to_canonical(80.0, 'MHz'), detuning=0.0, gamma_mean=0.035, gamma0=0.0,
        omega10=omega10, drive_phase=-0.5 * math.pi,
    )
    initial = QubitState.from_bloch(BlochState(1.0, 0.0, SQRT_HALF, -SQRT_HALF))
    return Scenario('fig2-bloch', params, initial, TimeGrid.parse(grid), Mode.RWA, ('populations', 'escape', 'bloch'))

def _rabi_params(omega10):
    return QubitParams.from_rwa(
        rabi0=to_canonical(0.47, 'MHz'), detuning=to_canonical(1.34, 'MHz'),
        gamma_mean=to_canonical(0.204, 'us^-1'), gamma0=to_canonical(0.4e-3, 'us^-1'),
        omega10=omega10,
    )

def rabi_oscillation(omega10=DEFAULT_OMEGA10, grid='0:10000:2001'):
    """Decaying Rabi oscillation starting from the fitted 0.291|1> + 0.956|0>.

    The quoted amplitudes are normalised (their squares sum to 0.998).
    """
    initial = QubitState(0.291, 0.956).normalized()
    return Scenario('fig3-rabi', _rabi_params(omega10), initial, TimeGrid.parse(grid), Mode.RWA, ('populations', 'escape'))

def rabi_from_ground(omega10=DEFAULT_OMEGA10, grid='0:10000:2001'):
    return Scenario('fig3-special', _rabi_params(omega10), QubitState.ground(), TimeGrid.parse(grid), Mode.RWA, ('populations', 'escape'))

def fast_readout_params(omega10=DEFAULT_OMEGA10):
    return QubitParams(omega0=0.0, omega1=omega10, gamma1=FAST_READOUT_GAMMA1,
                       gamma0=FAST_READOUT_GAMMA1 / FAST_READOUT_RATIO)

def channel_deviation(c1=SQRT_HALF, c0=SQRT_HALF, omega10=DEFAULT_OMEGA10, grid='0:3:601', name='fig4-deviation'):
    """Zero-drive evolution with F(t), the relative change of ρ11 due to Γ₀₁."""
    return Scenario(name, fast_readout_params(omega10), QubitState(c1, c0), TimeGrid.parse(grid), Mode.ZERO_DRIVE,
                    ('populations', 'escape', 'bloch', 'deviation'))

def fast_readout_escape(omega10=DEFAULT_OMEGA10, grid='0:50:501'):
    """Escape probability of an equal superposition at zero drive."""
    return Scenario('fast-readout-escape', fast_readout_params(omega10), QubitState(SQRT_HALF, SQRT_HALF),
                    TimeGrid.parse(grid), Mode.ZERO_DRIVE, ('populations', 'escape'))

import math

from phase_qubit.scenarios.registration import registry, register, make, spec, deregister, list, Scenario, ScenarioSpec, TimeGrid

# Parameter regimes
# ----------------------------------------

register(
    id='fig2-bloch',
    entry_point='phase_qubit.scenarios.presets:bloch_spiral',
    description='Bloch-vector spiral under resonant drive (Γ = 0.035 ns^-1, Ω₀/2π = 80 MHz)',
    quoted_values=(
        ('params.rabi0', 80.0, 'MHz'),
        ('params.detuning', 0.0, 'MHz'),
        ('params.gamma_mean', 0.035, 'ns^-1'),
        ('params.gamma0', 0.0, 'ns^-1'),
        ('params.drive_phase', -90.0, 'deg'),
        ('initial_bloch.n0', 1.0, None),
        ('initial_bloch.nx', 0.0, None),
        ('initial_bloch.ny', math.sqrt(0.5), None),
        ('initial_bloch.nz', -math.sqrt(0.5), None),
    ),
)

register(
    id='fig3-rabi',
    entry_point='phase_qubit.scenarios.presets:rabi_oscillation',
    description='Decaying Rabi oscillation from 0.291|1> + 0.956|0> (Ω₀/2π = 0.47 MHz, Δ/2π = 1.34 MHz)',
    quoted_values=(
        ('params.rabi0', 0.47, 'MHz'),
        ('params.detuning', 1.34, 'MHz'),
        ('params.gamma_mean', 0.204, 'us^-1'),
        ('params.gamma0', 0.4e-3, 'us^-1'),
    ),
)

register(
    id='fig3-special',
    entry_point='phase_qubit.scenarios.presets:rabi_from_ground',
    description='Rabi oscillation from the ground state, C1(0) = 0',
    quoted_values=(
        ('params.rabi0', 0.47, 'MHz'),
        ('params.detuning', 1.34, 'MHz'),
        ('params.gamma_mean', 0.204, 'us^-1'),
        ('params.gamma0', 0.4e-3, 'us^-1'),
        ('initial.c1', 0.0, None),
    ),
)

_FAST_READOUT = (
    ('params.omega10', 5.0, 'GHz'),
    ('params.gamma1', 0.1, 'ns^-1'),
    ('params.gamma0', 0.1 / 150, 'ns^-1'),
    ('params.rabi0', 0.0, 'MHz'),
)

register(
    id='fig4-deviation',
    entry_point='phase_qubit.scenarios.presets:channel_deviation',
    description='Channel-interaction deviation F(t) for C0(0) = C1(0) = 1/√2 at zero drive',
    quoted_values=_FAST_READOUT,
)

register(
    id='fig4-deviation-upper',
    entry_point='phase_qubit.scenarios.presets:channel_deviation',
    kwargs={'c1': 1.0, 'c0': 0.0, 'name': 'fig4-deviation-upper'},
    description='Channel-interaction deviation F(t) for C1(0) = 1 at zero drive',
    quoted_values=_FAST_READOUT + (('initial.c0', 0.0, None),),
)

register(
    id='fast-readout-escape',
    entry_point='phase_qubit.scenarios.presets:fast_readout_escape',
    description='Escape probability of an equal superposition over 50 ns at zero drive (Γ₁ = 0.1 ns^-1, Γ₁/Γ₀ = 150)',
    quoted_values=_FAST_READOUT,
)

import math

import pytest

from phase_qubit.configuration import DEFAULT_OMEGA10
from phase_qubit.oracle import IntegratorConfig
from phase_qubit.params import QubitParams, to_canonical

SQRT_HALF = math.sqrt(0.5)


def rabi_params(**changes):
    params = QubitParams.from_rwa(
        rabi0=to_canonical(0.47, 'MHz'), detuning=to_canonical(1.34, 'MHz'),
        gamma_mean=to_canonical(0.204, 'us^-1'), gamma0=to_canonical(0.4e-3, 'us^-1'),
    )
    return params.replace(**changes) if changes else params

def spiral_params(**changes):
    params = QubitParams.from_rwa(rabi0=to_canonical(80.0, 'MHz'), detuning=0.0, gamma_mean=0.035, gamma0=0.0,
                                  drive_phase=-0.5 * math.pi)
    return params.replace(**changes) if changes else params

def fast_readout_params(**changes):
    params = QubitParams(omega1=DEFAULT_OMEGA10, gamma1=0.1, gamma0=0.1 / 150)
    return params.replace(**changes) if changes else params


@pytest.fixture
def rabi():
    return rabi_params()

@pytest.fixture
def spiral():
    return spiral_params()

@pytest.fixture
def fast_readout():
    return fast_readout_params()

@pytest.fixture
def tight():
    return IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)

@pytest.fixture
def no_output_dir(monkeypatch):
    monkeypatch.delenv('PHASE_QUBIT_OUTPUT_DIR', raising=False)

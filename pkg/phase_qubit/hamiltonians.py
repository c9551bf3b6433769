"""Builders for the non-Hermitian evolution generators.

A generator G acts as i du/dt = G(t) u on amplitude vectors u = (C1, C0).
Every builder returns G = H − iW with W = (1/2)[[Γ1, Γ01], [Γ10, Γ0]].
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from phase_qubit.params import principal_sqrt

logger = logging.getLogger(__name__)

# (2, 2) complex ndarray laid out in the (|1>, |0>) ordering
Generator2 = np.ndarray


def generator(a11, a10, a01, a00):
    return np.array([[a11, a10], [a01, a00]], dtype=complex)

def hermitian_part(gen):
    return 0.5 * (gen + gen.conj().T)

def decay_matrix(gen):
    """W = i(G − G†)/2, the anti-Hermitian part of G = H − iW."""
    return 0.5j * (gen - gen.conj().T)

def eigenvalue_splitting(gen):
    """Difference of the two eigenvalues of G, on the principal branch."""
    gen = np.asarray(gen, dtype=complex)
    diff = gen[0, 0] - gen[1, 1]
    return principal_sqrt(diff * diff + 4 * gen[0, 1] * gen[1, 0])


@dataclass(frozen=True)
class TimeDependentGenerator(object):
    """A pure evaluation function t -> G(t) with its period.

    Args:
        evaluate (Callable[[float], np.ndarray]): returns the (2, 2) generator at t (ns)
        period (Optional[float]): drive period 2π/ω in ns; None for a constant generator
        description (str): short label used in logs and reports
    """
    evaluate: Callable[[float], np.ndarray]
    period: Optional[float] = None
    description: str = ''

    @classmethod
    def constant(cls, gen, description=''):
        gen = np.array(gen, dtype=complex)
        gen.setflags(write=False)
        return cls(evaluate=lambda t: gen, period=None, description=description)

    @property
    def is_constant(self):
        return self.period is None

    def __call__(self, t):
        return self.evaluate(t)


def build_lab_frame(params):
    """Lab-frame generator with the full drive Ω₀cos(ωt + φ) on the off-diagonal."""
    a11 = complex(params.omega1, -0.5 * params.gamma1)
    a00 = complex(params.omega0, -0.5 * params.gamma0)
    off = complex(0.0, -0.5 * params.gamma01)
    rabi0, freq, phase = params.rabi0, params.drive_freq, params.drive_phase

    if rabi0 == 0 or freq == 0:
        drive = rabi0 * math.cos(phase)
        return TimeDependentGenerator.constant(generator(a11, drive + off, drive + off, a00), 'lab-frame (static)')

    def evaluate(t):
        drive = rabi0 * math.cos(freq * t + phase)
        return np.array([[a11, drive + off], [drive + off, a00]], dtype=complex)

    return TimeDependentGenerator(evaluate=evaluate, period=2 * math.pi / freq, description='lab-frame')

def build_rwa(params, gamma01=0.0):
    """Rotating-frame generator (1/2)[[λ₀+Δ−iΓ₁, Ω₀e^{−iφ}], [Ω₀e^{iφ}, λ₀−Δ−iΓ₀]].

    The channel interaction Γ₀₁ is dropped unless passed explicitly.
    """
    lam, delta = params.lambda0, params.detuning
    coupling = params.rabi0 * np.exp(-1j * params.drive_phase)
    off = -0.5j * gamma01
    return generator(
        0.5 * complex(lam + delta, -params.gamma1), 0.5 * coupling + off,
        0.5 * np.conj(coupling) + off, 0.5 * complex(lam - delta, -params.gamma0),
    )

def build_zero_drive(params, gamma01=None):
    """Generator at zero ac current; Γ₀₁ defaults to params.gamma01."""
    if gamma01 is None:
        gamma01 = params.gamma01
    off = -0.5j * gamma01
    return generator(
        complex(params.omega1, -0.5 * params.gamma1), off,
        off, complex(params.omega0, -0.5 * params.gamma0),
    )

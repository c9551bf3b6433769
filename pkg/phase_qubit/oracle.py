"""Independent numerical propagation of i du/dt = G(t) u.

`expm_const` is the exact exponential of a constant 2x2 generator, `integrate`
an explicit Dormand-Prince 5(4) embedded pair with an elementary step-size
controller. Both are used to validate the closed forms in `propagators`.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from phase_qubit import error
from phase_qubit.configuration import OVERFLOW_BOUND
from phase_qubit.hamiltonians import TimeDependentGenerator, eigenvalue_splitting
from phase_qubit.state import QubitState, check_time_grid

logger = logging.getLogger(__name__)

IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class IntegratorConfig(object):
    """Tolerances and limits of the adaptive integrator.

    Args:
        rel_tol (float): relative local error tolerance
        abs_tol (float): absolute local error tolerance
        max_step (float): largest step, ns
        initial_step (Optional[float]): first trial step, ns; chosen automatically if None
        max_steps (int): limit on attempted steps per call
    """
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    initial_step: Optional[float] = None
    max_steps: int = 10 ** 7
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 5.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise error.InvalidParams('Integrator tolerances must be positive, got rel_tol={}, abs_tol={}'.format(self.rel_tol, self.abs_tol))
        if self.max_steps <= 0:
            raise error.InvalidParams('max_steps must be positive, got {}'.format(self.max_steps))
        if not self.max_step > 0:
            raise error.InvalidParams('max_step must be positive, got {}'.format(self.max_step))
        if self.initial_step is not None and not self.initial_step > 0:
            raise error.InvalidParams('initial_step must be positive, got {}'.format(self.initial_step))

    def tightened(self, factor):
        return IntegratorConfig(self.rel_tol / factor, self.abs_tol / factor, self.max_step,
                                self.initial_step, self.max_steps, self.safety, self.min_factor, self.max_factor)

# ----------------------------------------------------------------------------
# Exact exponential of a constant generator

def sin_over_half(omega, t):
    """sin(Ωt/2)/(Ω/2), continued to t at Ω = 0."""
    half = 0.5 * omega * t
    small = np.abs(half) < 1e-4
    safe = np.where(small, 1.0, half)
    return np.where(small, t * (1 - half ** 2 / 6 + half ** 4 / 120), t * np.sin(safe) / safe)

def check_overflow(omega, t):
    worst = abs(complex(omega).imag) * float(np.max(np.abs(t)))
    if worst > OVERFLOW_BOUND:
        raise error.PropagationOverflow('|Im(Omega)|*t = {:.6g} exceeds the overflow bound {}. '
                                        '(HINT: shorten the time grid)'.format(worst, OVERFLOW_BOUND))

def expm_const(gen, t):
    """Propagator e^{-iGt} for a constant generator.

    With m = tr(G)/2 and Ω the eigenvalue splitting,
    e^{-iGt} = e^{-imt} [cos(Ωt/2) I − (2i/Ω) sin(Ωt/2) (G − mI)];
    the Jordan-block limit is taken when Ω = 0. Returns a (2, 2) array for
    scalar t and an (n, 2, 2) array for a 1-d array of times.
    """
    gen = np.asarray(gen, dtype=complex)
    times = np.asarray(t, dtype=float)
    mean = 0.5 * (gen[0, 0] + gen[1, 1])
    traceless = gen - mean * IDENTITY
    omega = eigenvalue_splitting(gen)
    check_overflow(omega, times)

    cos_part = np.cos(0.5 * omega * times)[..., None, None]
    sin_part = sin_over_half(omega, times)[..., None, None]
    phase = np.exp(-1j * mean * times)[..., None, None]
    return phase * (cos_part * IDENTITY - 1j * sin_part * traceless)

# ----------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
# 5th order weights; the 7th stage is evaluated at the new point (FSAL)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between 5th and embedded 4th order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_ERROR_EXPONENT = -1 / 5


class _Stepper(object):
    """Carries step size and derivative between successive integration spans."""

    def __init__(self, gen, cfg):
        self.gen = gen
        self.cfg = cfg
        self.h = cfg.initial_step
        self.steps = 0
        self.rejected = 0
        self.k = np.empty((7, 2), dtype=complex)

    def rhs(self, t, y):
        return -1j * (self.gen(t) @ y)

    def _error_norm(self, err, y, y_new):
        scale = self.cfg.abs_tol + self.cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        return math.sqrt(np.mean(np.abs(err / scale) ** 2))

    def _initial_step(self, t, y, f, span):
        cfg = self.cfg
        scale = cfg.abs_tol + cfg.rel_tol * np.abs(y)
        d0 = math.sqrt(np.mean(np.abs(y / scale) ** 2))
        d1 = math.sqrt(np.mean(np.abs(f / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, span)
        f1 = self.rhs(t + h0, y + h0 * f)
        d2 = math.sqrt(np.mean(np.abs((f1 - f) / scale) ** 2)) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1, span, cfg.max_step)

    def advance(self, y, t0, t1):
        cfg = self.cfg
        if t1 < t0:
            raise error.InvalidTimeGrid('Cannot integrate backwards from t0={} to t1={}'.format(t0, t1))
        if t1 == t0:
            return y
        t = t0
        k = self.k
        f = self.rhs(t, y)
        if self.h is None:
            self.h = self._initial_step(t, y, f, t1 - t0)

        while t < t1:
            if self.steps >= cfg.max_steps:
                raise error.StepLimitExceeded('Integration exhausted max_steps={} at t={} (target {}). '
                                              '(HINT: loosen the tolerances or raise max_steps)'.format(cfg.max_steps, t, t1))
            h = min(self.h, cfg.max_step)
            last = t + h >= t1 - 16 * np.spacing(abs(t1))
            if last:
                h = t1 - t
            if h <= 10 * np.spacing(max(abs(t), abs(t1))):
                raise error.StepUnderflow('Step size underflow at t={} (h={})'.format(t, h))

            k[0] = f
            for i in range(1, 6):
                k[i] = self.rhs(t + _C[i] * h, y + h * (_A[i] @ k[:i]))
            y_new = y + h * (_B @ k[:6])
            k[6] = self.rhs(t + h, y_new)
            self.steps += 1

            if not np.all(np.isfinite(y_new)):
                raise error.NonFiniteState('Non-finite state at t={}'.format(t + h))

            err = self._error_norm(h * (_E @ k), y, y_new)
            if err <= 1.0:
                t = t1 if last else t + h
                y = y_new
                f = k[6].copy()
                if err == 0.0:
                    factor = cfg.max_factor
                else:
                    factor = min(cfg.max_factor, max(cfg.min_factor, cfg.safety * err ** _ERROR_EXPONENT))
                # keep the proposal for the next span rather than the clipped last step
                self.h = h * factor if not last else max(self.h, h * factor)
            else:
                self.rejected += 1
                self.h = h * max(cfg.min_factor, cfg.safety * err ** _ERROR_EXPONENT)
        return y


def integrate(gen, initial, t0, t1, cfg=None):
    """Integrates i du/dt = G(t) u from t0 to t1 with adaptive step control."""
    cfg = IntegratorConfig() if cfg is None else cfg
    stepper = _Stepper(gen, cfg)
    y = stepper.advance(initial.as_array(), float(t0), float(t1))
    logger.debug('Integrated %s from %s to %s in %d steps (%d rejected)',
                 gen.description or 'generator', t0, t1, stepper.steps, stepper.rejected)
    return QubitState.from_array(y)

def solve(gen, initial, times, cfg=None, t0=0.0):
    """States at each of `times`, integrating sequentially from (t0, initial).

    Returns an (n, 2) complex array in (C1, C0) order.
    """
    cfg = IntegratorConfig() if cfg is None else cfg
    times = check_time_grid(times)
    if times[0] < t0:
        raise error.InvalidTimeGrid('Time grid starts at {} before t0={}'.format(times[0], t0))
    stepper = _Stepper(gen, cfg)
    y = initial.as_array()
    out = np.empty((times.size, 2), dtype=complex)
    t = float(t0)
    for i, target in enumerate(times):
        y = stepper.advance(y, t, float(target))
        t = float(target)
        out[i] = y
    logger.debug('Solved %s over %d grid points in %d steps (%d rejected)',
                 gen.description or 'generator', times.size, stepper.steps, stepper.rejected)
    return out

def solve_constant(gen, initial, times, cfg=None, description=''):
    """`solve` for a constant (2, 2) generator.

    The real part of the mean eigenvalue only contributes the scalar phase
    e^{-i Re(m) t}; it is removed before integrating and applied exactly
    afterwards, so the step count follows the splitting and the decay rather
    than λ₀.
    """
    gen = np.asarray(gen, dtype=complex)
    shift = 0.5 * (gen[0, 0] + gen[1, 1]).real
    shifted = TimeDependentGenerator.constant(gen - shift * IDENTITY, description)
    times = check_time_grid(times)
    return np.exp(-1j * shift * times)[:, None] * solve(shifted, initial, times, cfg)

"""Two-level states, their Bloch/density-matrix views and time-series containers.

Basis ordering is fixed as (|1>, |0>): index 0 of every amplitude vector is the
upper-level amplitude C1, and sigma_z = +1 on |1>.
"""
import cmath
import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from phase_qubit import error
from phase_qubit.configuration import REPORT_EPS

logger = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

PURITY_TOL = 1e-9


@dataclass(frozen=True)
class QubitState(object):
    """Pure (possibly decayed) state C1|1> + C0|0>."""
    c1: complex
    c0: complex

    def __post_init__(self):
        c1, c0 = complex(self.c1), complex(self.c0)
        if not (cmath.isfinite(c1) and cmath.isfinite(c0)):
            raise error.InvalidState('Amplitudes must be finite, got ({}, {})'.format(c1, c0))
        object.__setattr__(self, 'c1', c1)
        object.__setattr__(self, 'c0', c0)

    @classmethod
    def ground(cls):
        return cls(0.0, 1.0)

    @classmethod
    def excited(cls):
        return cls(1.0, 0.0)

    @classmethod
    def from_array(cls, amplitudes):
        c1, c0 = np.asarray(amplitudes, dtype=complex).reshape(2)
        return cls(c1, c0)

    @classmethod
    def from_bloch(cls, b):
        """One preimage of a saturated Bloch vector, with C0 real and non-negative."""
        if abs(b.nx ** 2 + b.ny ** 2 + b.nz ** 2 - b.n0 ** 2) > PURITY_TOL * max(1.0, b.n0 ** 2):
            raise error.InvalidState('Bloch vector {} does not describe a pure state'.format(b))
        c0 = math.sqrt(max(0.5 * (b.n0 - b.nz), 0.0))
        if c0 > 0:
            c1 = complex(b.nx, -b.ny) / (2 * c0)
        else:
            c1 = math.sqrt(max(0.5 * (b.n0 + b.nz), 0.0))
        return cls(c1, c0)

    def as_array(self):
        return np.array([self.c1, self.c0], dtype=complex)

    @property
    def norm2(self):
        return abs(self.c1) ** 2 + abs(self.c0) ** 2

    def normalized(self):
        norm = math.sqrt(self.norm2)
        if norm == 0:
            raise error.InvalidState('Cannot normalize the zero state')
        return QubitState(self.c1 / norm, self.c0 / norm)


@dataclass(frozen=True)
class BlochState(object):
    n0: float
    nx: float
    ny: float
    nz: float

    def as_tuple(self):
        return (self.n0, self.nx, self.ny, self.nz)


def populations(state):
    """Returns (rho11, rho00) = (|C1|², |C0|²)."""
    return abs(state.c1) ** 2, abs(state.c0) ** 2

def bloch(state):
    cross = state.c1.conjugate() * state.c0
    rho11, rho00 = populations(state)
    return BlochState(n0=rho11 + rho00, nx=2 * cross.real, ny=2 * cross.imag, nz=rho11 - rho00)

def bloch_to_density(b):
    """(n0·I + n·σ)/2; Hermitian with trace n0."""
    return 0.5 * (b.n0 * IDENTITY + b.nx * SIGMA_X + b.ny * SIGMA_Y + b.nz * SIGMA_Z)

def report_probability(values):
    """Clips floating-point dust in [-REPORT_EPS, 0) to zero; anything else is left alone."""
    values = np.asarray(values, dtype=float)
    return np.where((values < 0) & (values >= -REPORT_EPS), 0.0, values)

def check_time_grid(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise error.InvalidTimeGrid('Time grid must be a non-empty 1-d sequence')
    if not np.all(np.isfinite(times)):
        raise error.InvalidTimeGrid('Time grid must be finite')
    if np.any(np.diff(times) <= 0):
        raise error.InvalidTimeGrid('Time grid must be strictly increasing')
    return times

# ----------------------------------------------------------------------------
# Time series

COLUMNS = ('rho11', 'rho00', 'p_esc', 'n0', 'nx', 'ny', 'nz')
HEADER = ('t_ns',) + COLUMNS


@dataclass(frozen=True, eq=False)
class TimeSeries(object):
    """Sampled populations, escape probability and Bloch components.

    Args:
        times (np.ndarray): strictly increasing sample times, ns
        rows (np.ndarray): shape (len(times), 7), columns in COLUMNS order
        extra (dict): optional additional columns (e.g. 'deviation'), written
            after the fixed header
    """
    times: np.ndarray
    rows: np.ndarray
    extra: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        times = check_time_grid(self.times)
        rows = np.asarray(self.rows, dtype=float)
        if rows.shape != (times.size, len(COLUMNS)):
            raise error.InvalidState('Expected rows of shape {}, got {}'.format((times.size, len(COLUMNS)), rows.shape))
        extra = {}
        for name, values in self.extra.items():
            values = np.asarray(values, dtype=float)
            if values.shape != times.shape:
                raise error.InvalidState('Extra column {} has shape {}, expected {}'.format(name, values.shape, times.shape))
            extra[name] = values
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'extra', extra)

    @classmethod
    def from_amplitudes(cls, times, amplitudes, extra=None):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        c1, c0 = amplitudes[:, 0], amplitudes[:, 1]
        rho11 = np.abs(c1) ** 2
        rho00 = np.abs(c0) ** 2
        cross = np.conj(c1) * c0
        n0 = rho11 + rho00
        rows = np.column_stack([
            rho11, rho00, report_probability(1.0 - n0),
            n0, 2 * cross.real, 2 * cross.imag, rho11 - rho00,
        ])
        return cls(times, rows, {} if extra is None else dict(extra))

    def __len__(self):
        return self.times.size

    @property
    def header(self):
        return HEADER + tuple(self.extra)

    def column(self, name):
        if name == 't_ns':
            return self.times
        if name in COLUMNS:
            return self.rows[:, COLUMNS.index(name)]
        if name in self.extra:
            return self.extra[name]
        raise KeyError('Unknown column: {}'.format(name))

    def replace_columns(self, **columns):
        rows = self.rows.copy()
        extra = dict(self.extra)
        for name, values in columns.items():
            if name in COLUMNS:
                rows[:, COLUMNS.index(name)] = values
            else:
                extra[name] = values
        return TimeSeries(self.times, rows, extra)

    def to_records(self):
        names = self.header
        table = np.column_stack([self.column(name) for name in names])
        return [dict(zip(names, (float(v) for v in row))) for row in table]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow(self.header)
        table = np.column_stack([self.column(name) for name in self.header])
        for row in table:
            writer.writerow(['%.17g' % v for v in row])
        return buf.getvalue()

    def to_json(self):
        return json.dumps(self.to_records()) + '\n'

"""Nonlinear least-squares extraction of (Ω₀, Δ, ...) from Rabi/escape data.

The decay parameters Γ and Γ₀ are fixed at user-supplied values by default and
only the drive parameters are fitted. Fits are multi-start: seeds are derived
from the oscillation period of the envelope-corrected data unless given
explicitly, and the best converged seed wins.
"""
import csv
import enum
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import savgol_filter

from phase_qubit import error
from phase_qubit.configuration import DEFAULT_OMEGA10
from phase_qubit.params import QubitParams, canonical_unit, unit_convert, unit_dimension
from phase_qubit.propagators import rwa_populations, upper_population_special
from phase_qubit.state import QubitState, check_time_grid

logger = logging.getLogger(__name__)


class FitModel(enum.Enum):
    EQ10_SPECIAL = 'eq10_special'
    EQ8_GENERAL = 'eq8_general'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace('-', '_')
        key = {'eq10': 'eq10_special', 'special': 'eq10_special', 'eq8': 'eq8_general', 'general': 'eq8_general'}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise error.InvalidParams('Unknown fit model: {!r}. (HINT: one of {})'.format(value, ', '.join(m.value for m in cls)))


PARAMETERS = {
    FitModel.EQ10_SPECIAL: ('rabi0', 'detuning', 'gamma_mean', 'gamma0', 'scale'),
    FitModel.EQ8_GENERAL: ('rabi0', 'detuning', 'gamma_mean', 'gamma0', 'rho11_0', 'phase', 'scale'),
}

DEFAULT_FREE = {
    FitModel.EQ10_SPECIAL: ('rabi0', 'detuning'),
    FitModel.EQ8_GENERAL: ('rabi0', 'detuning', 'rho11_0', 'phase'),
}

# values used when a parameter is neither free nor given in `fixed`
DEFAULT_VALUES = {'scale': 1.0, 'phase': 0.0}

# internal unit -> display unit for reports
DISPLAY_UNITS = {
    'rabi0': ('rad/ns', 'MHz'),
    'detuning': ('rad/ns', 'MHz'),
    'gamma_mean': ('ns^-1', 'us^-1'),
    'gamma0': ('ns^-1', 'us^-1'),
}

def default_bounds(model):
    inf = math.inf
    bounds = {
        'rabi0': (0.0, inf),
        # ρ11 of the C1(0) = 0 solution is even in Δ
        'detuning': (0.0, inf) if model is FitModel.EQ10_SPECIAL else (-inf, inf),
        'gamma_mean': (0.0, inf),
        'gamma0': (0.0, inf),
        'scale': (0.0, inf),
        'rho11_0': (0.0, 1.0),
        'phase': (-inf, inf),
    }
    return {name: bounds[name] for name in PARAMETERS[model]}


@dataclass(frozen=True, eq=False)
class FitProblem(object):
    """Data plus model selection for a least-squares fit.

    Args:
        times (np.ndarray): strictly increasing sample times, ns
        values (np.ndarray): measured probabilities
        weights (Optional[np.ndarray]): non-negative residual weights (default 1)
        model (FitModel): eq10_special (C1(0) = 0) or eq8_general
        fixed (dict): parameter name -> fixed value (canonical units)
        free (Optional[Sequence[str]]): names to fit; defaults per model
        bounds (dict): parameter name -> (lo, hi), merged over the defaults
        seeds (Sequence[dict]): initial guesses for the free parameters; derived
            from the data when empty
        omega10 (float): level splitting used to build QubitParams, rad/ns
    """
    times: np.ndarray
    values: np.ndarray
    weights: Optional[np.ndarray] = None
    model: FitModel = FitModel.EQ10_SPECIAL
    fixed: Mapping[str, float] = field(default_factory=dict)
    free: Optional[Sequence[str]] = None
    bounds: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    seeds: Sequence[Mapping[str, float]] = ()
    omega10: float = DEFAULT_OMEGA10

    def __post_init__(self):
        model = FitModel.parse(self.model)
        object.__setattr__(self, 'model', model)
        times = check_time_grid(self.times)
        values = np.asarray(self.values, dtype=float)
        if values.shape != times.shape:
            raise error.InsufficientData('Got {} values for {} times'.format(values.size, times.size))
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise error.InvalidParams('Data value at t={} ns is not finite: {}'.format(times[bad], values[bad]))
        weights = np.ones_like(times) if self.weights is None else np.asarray(self.weights, dtype=float)
        if weights.shape != times.shape or np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise error.InvalidParams('Weights must be finite, non-negative and one per data point')
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'weights', weights)

        names = PARAMETERS[model]
        free = tuple(DEFAULT_FREE[model] if self.free is None else self.free)
        for name in tuple(free) + tuple(self.fixed):
            if name not in names:
                raise error.InvalidParams('Unknown parameter {!r} for model {}. (HINT: one of {})'.format(name, model.value, ', '.join(names)))
        overlap = set(free) & set(self.fixed)
        if overlap:
            raise error.InvalidParams('Parameters both free and fixed: {}'.format(', '.join(sorted(overlap))))
        if not free:
            raise error.InvalidParams('At least one parameter must be free')
        for name in names:
            if name not in free and name not in self.fixed and name not in DEFAULT_VALUES:
                raise error.InvalidParams('Parameter {} is fixed but has no value. '
                                          '(HINT: pass it in `fixed`, e.g. the measured decay rate)'.format(name))
        object.__setattr__(self, 'free', tuple(name for name in names if name in free))
        object.__setattr__(self, 'fixed', dict(self.fixed))

        minimum = 4 if model is FitModel.EQ10_SPECIAL else len(self.free) + 2
        if np.count_nonzero(weights) < minimum:
            raise error.InsufficientData('Model {} needs at least {} weighted data points, got {}'.format(model.value, minimum, np.count_nonzero(weights)))

        bounds = default_bounds(model)
        for name, (lo, hi) in dict(self.bounds).items():
            if name not in bounds:
                raise error.InvalidParams('Unknown parameter {!r} in bounds'.format(name))
            if not lo <= hi:
                raise error.InvalidParams('Empty bounds for {}: [{}, {}]'.format(name, lo, hi))
            bounds[name] = (float(lo), float(hi))
        object.__setattr__(self, 'bounds', bounds)

    @property
    def lower(self):
        return np.array([self.bounds[name][0] for name in self.free])

    @property
    def upper(self):
        return np.array([self.bounds[name][1] for name in self.free])

    def unpack(self, x):
        """Full parameter mapping for a vector of free values."""
        values = dict(DEFAULT_VALUES)
        values.update(self.fixed)
        values.update(zip(self.free, (float(v) for v in x)))
        return values

    def pack(self, values):
        return np.array([values[name] for name in self.free], dtype=float)

    def with_weights(self, weights):
        return FitProblem(self.times, self.values, weights, self.model, self.fixed, self.free, self.bounds, self.seeds, self.omega10)

    def with_seeds(self, seeds):
        return FitProblem(self.times, self.values, self.weights, self.model, self.fixed, self.free, self.bounds, seeds, self.omega10)


@dataclass(frozen=True)
class FitOptions(object):
    ftol: float = 1e-14
    xtol: float = 1e-14
    gtol: float = 1e-14
    max_nfev: int = 5000
    jac: str = '3-point'
    # a fitted signal whose peak stays below this is treated as no signal
    amplitude_floor: float = 1e-6
    rcond: float = 1e-10
    workers: int = 1


@dataclass(frozen=True, eq=False)
class FitResult(object):
    params_hat: Dict[str, float]
    free: Tuple[str, ...]
    residual_norm: float
    covariance: Optional[np.ndarray]
    converged: bool
    iterations: int
    seed_used: int
    degenerate: bool = False
    nfev: int = 0
    message: str = ''
    diagnostics: List[dict] = field(default_factory=list)

    @property
    def stderr(self):
        if self.covariance is None:
            return {name: None for name in self.free}
        return {name: float(math.sqrt(max(self.covariance[i, i], 0.0))) for i, name in enumerate(self.free)}

    def to_dict(self):
        params = {}
        stderr = self.stderr
        for name, value in self.params_hat.items():
            entry = {'value': value, 'fixed': name not in self.free}
            if name in DISPLAY_UNITS:
                internal, display = DISPLAY_UNITS[name]
                entry['unit'] = internal
                entry['display'] = {'value': unit_convert(value, internal, display), 'unit': display}
            if name in stderr and stderr[name] is not None:
                entry['stderr'] = stderr[name]
            params[name] = entry
        return {
            'params': params,
            'residual_norm': self.residual_norm,
            'covariance': None if self.covariance is None else self.covariance.tolist(),
            'converged': self.converged,
            'degenerate': self.degenerate,
            'iterations': self.iterations,
            'nfev': self.nfev,
            'seed_used': self.seed_used,
            'message': self.message,
        }

# ----------------------------------------------------------------------------
# Model and residuals

def model_params(values, omega10=DEFAULT_OMEGA10):
    return QubitParams.from_rwa(values['rabi0'], values['detuning'], values['gamma_mean'], values['gamma0'],
                                omega10=omega10, drive_phase=0.0, gamma01=0.0)

def model_initial_state(values):
    rho = values['rho11_0']
    return QubitState(math.sqrt(rho) * complex(math.cos(values['phase']), math.sin(values['phase'])), math.sqrt(1.0 - rho))

def evaluate_model(model, values, times, omega10=DEFAULT_OMEGA10):
    """ρ11(t) of the selected model, times the overall `scale`."""
    model = FitModel.parse(model)
    params = model_params(values, omega10)
    if model is FitModel.EQ10_SPECIAL:
        rho11 = upper_population_special(params, times)
    else:
        rho11, _ = rwa_populations(model_initial_state(values), params, times)
    return values['scale'] * np.asarray(rho11, dtype=float)

def residuals(problem, x):
    """Weighted model-minus-data vector for free parameter values x."""
    x = np.asarray(x, dtype=float)
    if np.any(x < problem.lower) or np.any(x > problem.upper):
        raise error.InvalidParams('Parameters {} outside bounds {}'.format(dict(zip(problem.free, x)), problem.bounds))
    values = problem.unpack(x)
    return problem.weights * (evaluate_model(problem.model, values, problem.times, problem.omega10) - problem.values)

def residual_jacobian(problem, x, rel_step=1e-6):
    """Central-difference Jacobian of `residuals`, shape (n_data, n_free).

    Steps are relative to |x_j|; one-sided differences are used on a bound.
    """
    x = np.asarray(x, dtype=float)
    jac = np.empty((problem.times.size, x.size))
    for j in range(x.size):
        h = rel_step * max(abs(x[j]), 1e-12)
        forward, backward = x.copy(), x.copy()
        if x[j] + h <= problem.upper[j]:
            forward[j] += h
        if x[j] - h >= problem.lower[j]:
            backward[j] -= h
        jac[:, j] = (residuals(problem, forward) - residuals(problem, backward)) / (forward[j] - backward[j])
    return jac

# ----------------------------------------------------------------------------
# Seeds

def estimate_rabi_period(times, values, gamma=0.0, window=0.5):
    """Oscillation period from mean crossings of the envelope-corrected data.

    The data are multiplied by e^{Γt}, restricted to e^{−Γt} >= window and
    smoothed with a symmetric Savitzky-Golay filter, which leaves crossing
    times in place. Upward crossings of the mean are detected with
    hysteresis (half a standard deviation) and interpolated linearly; the
    period is the slope of crossing time against crossing index. Returns None
    when fewer than two crossings are found.
    """
    times = np.asarray(times, dtype=float)
    corrected = np.asarray(values, dtype=float) * np.exp(gamma * times)
    keep = np.exp(-gamma * times) >= window
    if np.count_nonzero(keep) >= 8:
        times, corrected = times[keep], corrected[keep]
    centred = corrected - np.mean(corrected)
    width = max(5, (centred.size // 50) | 1)
    if centred.size > width:
        centred = savgol_filter(centred, width, 2)
    threshold = 0.5 * np.std(centred)
    if threshold == 0:
        return None

    crossings = []
    armed = False
    last_below = None
    for i, value in enumerate(centred):
        if value <= 0:
            last_below = i
        if value < -threshold:
            armed = True
        elif armed and value > threshold and last_below is not None:
            j = last_below
            t0, t1 = times[j], times[j + 1]
            v0, v1 = centred[j], centred[j + 1]
            crossings.append(t0 + (t1 - t0) * (-v0) / (v1 - v0))
            armed = False
    if len(crossings) < 2:
        return None
    slope = np.polyfit(np.arange(len(crossings)), np.asarray(crossings), 1)[0]
    return float(slope) if slope > 0 else None

def auto_seeds(problem):
    """Seed grid around the period and amplitude read off the data."""
    values = problem.unpack(np.zeros(len(problem.free)))
    gamma = values.get('gamma_mean', 0.0) if 'gamma_mean' not in problem.free else 0.0
    scale = values.get('scale', 1.0) if 'scale' not in problem.free else 1.0
    weighted = problem.weights > 0
    times, data = problem.times[weighted], problem.values[weighted]
    period = estimate_rabi_period(times, data, gamma)
    corrected = data * np.exp(gamma * times) / max(scale, 1e-300)

    if period is not None:
        frequencies = [2 * math.pi / period * f for f in (0.97, 1.0, 1.03)]
        amplitude = float(np.clip(np.max(corrected), 1e-6, 0.999))
    else:
        span = times[-1] - times[0]
        dt = np.min(np.diff(times))
        frequencies = list(2 * math.pi / np.geomspace(span, 4 * dt, 6))
        amplitude = 0.5

    guesses = []
    for frequency in frequencies:
        guess = {
            'rabi0': frequency * math.sqrt(amplitude),
            'detuning': frequency * math.sqrt(1.0 - amplitude),
            'gamma_mean': gamma if gamma > 0 else 1.0 / max(problem.times[-1], 1e-300),
            'gamma0': 0.0,
            'scale': 1.0,
        }
        if problem.model is FitModel.EQ8_GENERAL:
            rho = float(np.clip(data[0] / max(scale, 1e-300), 0.01, 0.99)) if times[0] == 0 else 0.1
            for phase in (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi):
                guesses.append(dict(guess, rho11_0=rho, phase=phase))
        else:
            guesses.append(guess)
    return [{name: g[name] for name in problem.free if name in g} for g in guesses]

def _seed_vector(problem, seed, fallback):
    x = np.array([seed.get(name, fallback.get(name, 0.0)) for name in problem.free], dtype=float)
    return np.clip(x, problem.lower, problem.upper)

# ----------------------------------------------------------------------------
# Fitting

def _covariance(jac, fun, n_free, rcond):
    """Gauss-Newton covariance s²(JᵀJ)⁻¹; (None, True) when J is rank deficient."""
    norms = np.linalg.norm(jac, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(jac)):
        return None, True
    _, s, vt = np.linalg.svd(jac / norms, full_matrices=False)
    if s[-1] <= rcond * s[0]:
        return None, True
    dof = max(fun.size - n_free, 1)
    s2 = float(np.dot(fun, fun)) / dof
    scaled = (vt.T / s ** 2) @ vt
    return s2 * scaled / np.outer(norms, norms), False

def _run_seed(problem, index, x0, options):
    try:
        res = least_squares(lambda x: residuals(problem, x), x0, jac=options.jac, bounds=(problem.lower, problem.upper),
                            method='trf', x_scale='jac', ftol=options.ftol, xtol=options.xtol, gtol=options.gtol,
                            max_nfev=options.max_nfev)
    except error.Error as e:
        logger.debug('Seed %d failed: %s', index, e)
        return None, {'seed': index, 'status': None, 'message': str(e), 'cost': None}
    diagnostic = {'seed': index, 'status': int(res.status), 'message': res.message, 'cost': float(res.cost)}
    logger.debug('Seed %d: status=%d cost=%.6g nfev=%d', index, res.status, res.cost, res.nfev)
    return res, diagnostic

def _iterations(res):
    """Accepted trust-region steps; the first Jacobian is taken at the seed."""
    if res.njev is None:
        return int(res.nfev)
    return max(int(res.njev) - 1, 0)

def fit(problem, options=None):
    """Multi-start weighted least squares; returns the best converged seed.

    Selection is the deterministic reduction by (converged, residual norm,
    seed index), so the result does not depend on `options.workers`.
    """
    options = FitOptions() if options is None else options
    seeds = list(problem.seeds) or auto_seeds(problem)
    fallback = auto_seeds(problem)[0] if problem.seeds else seeds[0]
    starts = [_seed_vector(problem, seed, fallback) for seed in seeds]

    if options.workers > 1:
        with ThreadPoolExecutor(max_workers=options.workers) as pool:
            runs = list(pool.map(lambda args: _run_seed(problem, args[0], args[1], options), enumerate(starts)))
    else:
        runs = [_run_seed(problem, i, x0, options) for i, x0 in enumerate(starts)]

    diagnostics = [diag for _, diag in runs]
    candidates = [(i, res) for i, (res, _) in enumerate(runs) if res is not None and res.status > 0]
    if not candidates:
        raise error.FitFailed('No seed converged out of {}'.format(len(starts)), diagnostics)
    index, res = min(candidates, key=lambda item: (float(np.linalg.norm(item[1].fun)), item[0]))

    values = problem.unpack(res.x)
    covariance, degenerate = _covariance(res.jac, res.fun, len(problem.free), options.rcond)
    peak = float(np.max(np.abs(evaluate_model(problem.model, values, problem.times, problem.omega10))))
    if peak < options.amplitude_floor:
        degenerate = True
        covariance = None
        if 'rabi0' in problem.free:
            logger.warning('Fitted signal peak %.3g is below the amplitude floor; rabi0 is unidentifiable and reported at its lower bound', peak)
            values['rabi0'] = problem.bounds['rabi0'][0]
    if degenerate:
        logger.warning('Degenerate Jacobian at the fitted point (seed %d); no covariance estimate', index)

    result = FitResult(
        params_hat=values,
        free=problem.free,
        residual_norm=float(np.linalg.norm(res.fun)),
        covariance=covariance,
        converged=bool(res.status > 0),
        iterations=_iterations(res),
        seed_used=index,
        degenerate=degenerate,
        nfev=int(res.nfev),
        message=res.message,
        diagnostics=diagnostics,
    )
    logger.info('Fit selected seed %d of %d: residual norm %.6g (%s)', index, len(starts), result.residual_norm,
                ', '.join('{}={:.6g}'.format(name, values[name]) for name in problem.free))
    return result

# ----------------------------------------------------------------------------
# Data

def synthesize(model, truth, times, noise=0.0, rng=None, omega10=DEFAULT_OMEGA10):
    """Model values at `times` plus optional Gaussian noise of width `noise`."""
    values = dict(DEFAULT_VALUES)
    values.update(truth)
    clean = evaluate_model(model, values, np.asarray(times, dtype=float), omega10)
    if noise == 0:
        return clean
    if rng is None:
        raise error.InvalidParams('A random generator is required for noisy synthetic data')
    return clean + rng.normal(0.0, noise, size=clean.shape)

def envelope_decay_rate(times, values):
    """Decay rate of the oscillatory component of a sampled population.

    Each interior maximum is measured against the mean of its neighbouring
    minima, which cancels a slowly drifting background; the rate is minus the
    slope of a linear fit of log(amplitude) against time.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    slope = np.diff(values)
    peaks = np.where((slope[:-1] > 0) & (slope[1:] <= 0))[0] + 1
    troughs = np.where((slope[:-1] < 0) & (slope[1:] >= 0))[0] + 1
    points, amplitudes = [], []
    for p in peaks:
        before = troughs[troughs < p]
        after = troughs[troughs > p]
        if before.size == 0 or after.size == 0:
            continue
        amplitude = values[p] - 0.5 * (values[before[-1]] + values[after[0]])
        if amplitude > 0:
            points.append(times[p])
            amplitudes.append(amplitude)
    if len(points) < 3:
        raise error.InsufficientData('Need at least three complete oscillations to estimate an envelope, got {}'.format(len(points)))
    return float(-np.polyfit(points, np.log(amplitudes), 1)[0])

_unit_re = re.compile(r'^#\s*(?:time_)?unit\s*[:=]\s*(\S+)\s*$', re.IGNORECASE)

def load_fit_data(path, time_unit=None, column='rho11'):
    """Reads fit data as (times_ns, values, weights).

    Accepts `t,p[,weight]` CSV, optionally preceded by a `# unit: us` line, or
    a time-series CSV written by `simulate` (header starting with t_ns), from
    which `column` is taken. An explicit `time_unit` overrides the file.
    """
    declared = None
    header = None
    header_line = None
    rows = []
    try:
        with open(path, newline='', encoding='utf-8') as f:
            for lineno, line in enumerate(f, start=1):
                stripped = line.strip()
                if not stripped:
                    continue
                if stripped.startswith('#'):
                    match = _unit_re.match(stripped)
                    if match:
                        declared = match.group(1)
                    continue
                cells = next(csv.reader([stripped]))
                if header is None:
                    header = [cell.strip() for cell in cells]
                    header_line = lineno
                    continue
                if len(cells) != len(header):
                    raise error.ParseError('expected {} fields, got {}'.format(len(header), len(cells)), lineno)
                try:
                    row = [float(cell) for cell in cells]
                except ValueError:
                    raise error.ParseError('non-numeric field in {!r}'.format(stripped), lineno)
                if not all(math.isfinite(v) for v in row):
                    raise error.ParseError('non-finite field in {!r}'.format(stripped), lineno)
                rows.append(row)
    except UnicodeDecodeError as e:
        raise error.ParseError('{} is not UTF-8 text ({})'.format(path, e.reason))
    if header is None or not rows:
        raise error.ParseError('no data rows in {}'.format(path))

    table = np.array(rows)
    if header[0] == 't_ns':
        if column not in header:
            raise error.ParseError('column {!r} not in time-series header {}'.format(column, ','.join(header)))
        unit = 'ns'
        times, values, weights = table[:, 0], table[:, header.index(column)], None
    elif header[:2] == ['t', 'p'] and len(header) in (2, 3) and (len(header) == 2 or header[2] == 'weight'):
        unit = declared or 'ns'
        times, values = table[:, 0], table[:, 1]
        weights = table[:, 2] if len(header) == 3 else None
    else:
        raise error.ParseError('unrecognised header {!r}. (HINT: expected "t,p[,weight]" or a simulate time series)'.format(','.join(header)), header_line)

    if time_unit is not None:
        unit = time_unit
    if unit_dimension(unit) != 'time':
        raise error.UnitError('{} is not a time unit'.format(unit))
    times = unit_convert(times, canonical_unit(unit), 'ns')
    return times, values, weights

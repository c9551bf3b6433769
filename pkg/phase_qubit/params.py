"""Physical parameters, unit conventions and derived rotating-frame quantities.

Internal units are canonical throughout the package: time in ns, angular
frequencies in rad/ns and tunneling rates in ns^-1. Conversions happen only at
the I/O boundary (parameter files, CLI flags, reports).
"""
import cmath
import dataclasses
import logging
import math
import re
from dataclasses import dataclass
from typing import Optional

from phase_qubit import error
from phase_qubit.configuration import DEFAULT_OMEGA10

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi

# unit tag -> (dimension, factor to the canonical unit of that dimension)
_UNITS = {
    'MHz': ('angular_frequency', TWO_PI * 1e-3),
    'GHz': ('angular_frequency', TWO_PI),
    'rad/s': ('angular_frequency', 1e-9),
    'rad/ns': ('angular_frequency', 1.0),
    'us^-1': ('rate', 1e-3),
    'ns^-1': ('rate', 1.0),
    'ns': ('time', 1.0),
    'us': ('time', 1e3),
    'rad': ('angle', 1.0),
    'deg': ('angle', math.pi / 180),
}

_ALIASES = {
    'µs⁻¹': 'us^-1', 'μs⁻¹': 'us^-1', '1/us': 'us^-1', 'us-1': 'us^-1',
    'ns⁻¹': 'ns^-1', '1/ns': 'ns^-1', 'ns-1': 'ns^-1',
    'µs': 'us', 'μs': 'us',
    'mhz': 'MHz', 'ghz': 'GHz',
}

CANONICAL_UNITS = {
    'angular_frequency': 'rad/ns',
    'rate': 'ns^-1',
    'time': 'ns',
    'angle': 'rad',
}

def canonical_unit(tag):
    """Returns the canonical spelling of a unit tag (e.g. 'µs⁻¹' -> 'us^-1')."""
    tag = tag.strip()
    if tag in _UNITS:
        return tag
    if tag in _ALIASES:
        return _ALIASES[tag]
    raise error.UnitError('Unknown unit tag: {!r}. (HINT: known units are {})'.format(tag, ', '.join(sorted(_UNITS))))

def unit_dimension(tag):
    return _UNITS[canonical_unit(tag)][0]

def unit_convert(value, from_unit, to_unit):
    """Converts a scalar between two unit tags of the same dimension.

    Frequencies quoted in Hz (MHz, GHz) become angular frequencies through the
    2π factor, so 80 MHz -> 2π·0.080 rad/ns.
    """
    src_dim, src_factor = _UNITS[canonical_unit(from_unit)]
    dst_dim, dst_factor = _UNITS[canonical_unit(to_unit)]
    if src_dim != dst_dim:
        raise error.UnitError('Cannot convert {} ({}) to {} ({})'.format(from_unit, src_dim, to_unit, dst_dim))
    if src_factor == dst_factor:
        return value
    return value * src_factor / dst_factor

def to_canonical(value, unit):
    dim = unit_dimension(unit)
    return unit_convert(value, unit, CANONICAL_UNITS[dim])

def tunneling_rate(alpha):
    """Tunneling rate Γ = 2π α² for a real constant tunneling amplitude α."""
    return TWO_PI * alpha ** 2

def principal_sqrt(w):
    """Complex square root with Re >= 0, and Im >= 0 when Re == 0."""
    root = cmath.sqrt(complex(w))
    if root.real == 0.0 and root.imag < 0.0:
        root = -root
    return root


@dataclass(frozen=True)
class QubitParams(object):
    """Physical parameters of the qubit-detector system, in canonical units.

    Args:
        omega0 (float): energy of level |0>, rad/ns
        omega1 (float): energy of level |1>, rad/ns
        gamma0 (float): tunneling rate from |0>, ns^-1
        gamma1 (float): tunneling rate from |1>, ns^-1
        gamma01 (Optional[float]): cross-channel rate, ns^-1. Defaults to
            sqrt(gamma0*gamma1); set to 0 to model the neglect of the
            channel interaction.
        rabi0 (float): on-resonance Rabi amplitude, rad/ns
        drive_freq (Optional[float]): microwave drive frequency, rad/ns.
            Defaults to the level splitting (resonant drive).
        drive_phase (float): drive phase, rad
    """
    omega0: float = 0.0
    omega1: float = DEFAULT_OMEGA10
    gamma0: float = 0.0
    gamma1: float = 0.0
    gamma01: Optional[float] = None
    rabi0: float = 0.0
    drive_freq: Optional[float] = None
    drive_phase: float = 0.0

    def __post_init__(self):
        if self.gamma01 is None:
            object.__setattr__(self, 'gamma01', math.sqrt(max(self.gamma0, 0.0) * max(self.gamma1, 0.0)))
        if self.drive_freq is None:
            object.__setattr__(self, 'drive_freq', self.omega1 - self.omega0)
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise error.InvalidParams('Parameter {} must be a real number, got {!r}'.format(field.name, value), field.name)
            if not math.isfinite(value):
                raise error.InvalidParams('Parameter {} must be finite, got {}'.format(field.name, value), field.name)
            object.__setattr__(self, field.name, value)

        for name in ('gamma0', 'gamma1', 'rabi0', 'drive_freq'):
            if getattr(self, name) < 0:
                raise error.InvalidParams('Parameter {} must be non-negative, got {}'.format(name, getattr(self, name)), name)
        bound = self.gamma0 * self.gamma1
        if self.gamma01 ** 2 > bound * (1 + 1e-12):
            raise error.InvalidParams('Cross-channel rate gamma01={} exceeds sqrt(gamma0*gamma1)={}. '
                                      '(HINT: the decay matrix W must stay positive semidefinite)'.format(self.gamma01, math.sqrt(bound)), 'gamma01')

    @classmethod
    def from_rwa(cls, rabi0, detuning, gamma_mean, gamma0=0.0, omega10=DEFAULT_OMEGA10, omega0=0.0,
                 drive_phase=0.0, gamma01=None):
        """Builds parameters from the rotating-frame quantities (Ω₀, Δ, Γ, Γ₀).

        Γ₁ = 2Γ − Γ₀ and ω = ω₁₀ − Δ.
        """
        return cls(omega0=omega0, omega1=omega0 + omega10, gamma0=gamma0, gamma1=2 * gamma_mean - gamma0,
                   gamma01=gamma01, rabi0=rabi0, drive_freq=omega10 - detuning, drive_phase=drive_phase)

    @property
    def omega10(self):
        return self.omega1 - self.omega0

    @property
    def lambda0(self):
        return self.omega0 + self.omega1

    @property
    def detuning(self):
        return self.omega10 - self.drive_freq

    @property
    def gamma_mean(self):
        return 0.5 * (self.gamma0 + self.gamma1)

    @property
    def decay_is_psd(self):
        return self.gamma01 ** 2 <= self.gamma0 * self.gamma1 * (1 + 1e-12)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def with_channel_coupling(self):
        return self.replace(gamma01=math.sqrt(self.gamma0 * self.gamma1))

    def without_channel_coupling(self):
        return self.replace(gamma01=0.0)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RwaParams(object):
    """Rotating-frame quantities derived from QubitParams.

    omega_c is the complex Rabi frequency Ω = sqrt(Ω₀² + (Δ − i(Γ − Γ₀))²);
    cos_theta = (Δ − i(Γ − Γ₀))/Ω and sin_theta = Ω₀/Ω.
    """
    lambda0: float
    omega10: float
    detuning: float
    gamma_mean: float
    omega_c: complex
    cos_theta: complex
    sin_theta: complex

    @property
    def lambda0_tilde(self):
        return complex(self.lambda0, -self.gamma_mean)


def complex_detuning(params):
    """Δ − i(Γ − Γ₀)."""
    return complex(params.detuning, -(params.gamma_mean - params.gamma0))

def complex_rabi_frequency(params):
    """Ω on the principal branch; unlike derive_rwa, Ω = 0 is returned as is."""
    z = complex_detuning(params)
    return principal_sqrt(params.rabi0 ** 2 + z * z)

def derive_rwa(params):
    z = complex_detuning(params)
    omega_c = principal_sqrt(params.rabi0 ** 2 + z * z)
    if omega_c == 0:
        raise error.ExceptionalPoint('Complex Rabi frequency vanishes for {}: the RWA generator is not diagonalizable. '
                                     '(HINT: propagators fall back to the degenerate limit; derive_rwa does not)'.format(params))
    return RwaParams(
        lambda0=params.lambda0,
        omega10=params.omega10,
        detuning=params.detuning,
        gamma_mean=params.gamma_mean,
        omega_c=omega_c,
        cos_theta=z / omega_c,
        sin_theta=params.rabi0 / omega_c,
    )

# ----------------------------------------------------------------------------
# Parameter files

PARAM_DIMENSIONS = {
    'omega0': 'angular_frequency',
    'omega1': 'angular_frequency',
    'omega10': 'angular_frequency',
    'drive_freq': 'angular_frequency',
    'detuning': 'angular_frequency',
    'rabi0': 'angular_frequency',
    'gamma0': 'rate',
    'gamma1': 'rate',
    'gamma_mean': 'rate',
    'gamma01': 'rate',
    'drive_phase': 'angle',
}

# alternative key -> the key it stands in for
_ALTERNATIVES = {
    'omega10': 'omega1',
    'detuning': 'drive_freq',
    'gamma_mean': 'gamma1',
}

_line_re = re.compile(r'^\s*([A-Za-z_][\w]*)\s*=\s*(\S+)\s*(.*?)\s*$')

def parse_quantity(text, dimension, line=None):
    """Parses '0.47 MHz' into a canonical float of the given dimension."""
    parts = text.split(None, 1)
    if not parts:
        raise error.ParseError('missing value', line)
    try:
        value = float(parts[0])
    except ValueError:
        raise error.ParseError('invalid number {!r}'.format(parts[0]), line)
    if len(parts) == 1:
        return value
    try:
        unit = canonical_unit(parts[1])
        if unit_dimension(unit) != dimension:
            raise error.UnitError('unit {} is not a {}'.format(parts[1], dimension.replace('_', ' ')))
        return unit_convert(value, unit, CANONICAL_UNITS[dimension])
    except error.UnitError as e:
        raise error.ParseError(str(e), line)

def _line_of(name, values):
    """Line of the key that set `name` (directly or through an alternative key)."""
    keys = [name] + [alt for alt, key in _ALTERNATIVES.items() if key == name]
    if name == 'gamma01':
        keys += ['gamma0', 'gamma1', 'gamma_mean']
    lines = [values[key][1] for key in keys if key in values]
    return max(lines) if lines else None

def parse_params(text, base=None):
    """Parses `key = value [unit]` lines into QubitParams.

    Keys not present keep the values of `base` (or the QubitParams defaults).
    Errors cite 1-based line numbers.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0]
        if not line.strip():
            continue
        match = _line_re.match(line)
        if not match:
            raise error.ParseError('expected "key = value [unit]", got {!r}'.format(raw.strip()), lineno)
        key = match.group(1)
        if key not in PARAM_DIMENSIONS:
            raise error.ParseError('unknown key {!r}. (HINT: known keys are {})'.format(key, ', '.join(sorted(PARAM_DIMENSIONS))), lineno)
        if key in values:
            raise error.ParseError('duplicate key {!r}'.format(key), lineno)
        quantity = ' '.join(part for part in (match.group(2), match.group(3)) if part)
        values[key] = (parse_quantity(quantity, PARAM_DIMENSIONS[key], lineno), lineno)

    for alt, key in _ALTERNATIVES.items():
        if alt in values and key in values:
            raise error.ParseError('{} and {} are alternatives; give only one'.format(key, alt), values[alt][1])

    base = QubitParams() if base is None else base
    fields = base.to_dict()
    rates_changed = any(k in values for k in ('gamma0', 'gamma1', 'gamma_mean'))
    if rates_changed and 'gamma01' not in values and base.gamma01 == math.sqrt(base.gamma0 * base.gamma1):
        fields['gamma01'] = None
    omega10 = base.omega10
    detuning = base.detuning
    for key, (value, _) in values.items():
        if key not in _ALTERNATIVES:
            fields[key] = value
    if 'omega10' in values:
        omega10 = values['omega10'][0]
    elif 'omega1' in values or 'omega0' in values:
        omega10 = fields['omega1'] - fields['omega0']
    fields['omega1'] = fields['omega0'] + omega10
    if 'detuning' in values:
        detuning = values['detuning'][0]
    if 'drive_freq' not in values:
        fields['drive_freq'] = omega10 - detuning
    if 'gamma_mean' in values:
        fields['gamma1'] = 2 * values['gamma_mean'][0] - fields['gamma0']

    try:
        return QubitParams(**fields)
    except error.InvalidParams as e:
        raise error.ParseError(str(e), _line_of(e.name, values))

def read_params_text(path):
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except UnicodeDecodeError as e:
        raise error.ParseError('{} is not UTF-8 text ({})'.format(path, e.reason))
    logger.debug('Loaded parameter file %s', path)
    return text

def load_params(path, base=None):
    return parse_params(read_params_text(path), base=base)

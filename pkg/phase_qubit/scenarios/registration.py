import cmath
import logging
import math
import re
from dataclasses import dataclass
from importlib.metadata import EntryPoint
from typing import Tuple

import numpy as np

from phase_qubit import error
from phase_qubit.params import QubitParams, to_canonical
from phase_qubit.propagators import Mode
from phase_qubit.state import QubitState, bloch

logger = logging.getLogger(__name__)

# [username/](scenario-name)[-v(version)]    scenario-name is group 1, version is group 2
scenario_id_re = re.compile(r'^(?:[\w:-]+\/)?([\w:.-]+?)(?:-v(\d+))?$')

OUTPUTS = ('populations', 'escape', 'bloch', 'deviation')

QUOTED_RTOL = 1e-12
QUOTED_ATOL = 1e-12

def load(name):
    entry_point = EntryPoint(name=None, value=name, group=None)
    result = entry_point.load()
    return result


@dataclass(frozen=True)
class TimeGrid(object):
    """Uniform grid of `count` samples from `start` to `stop` inclusive, ns."""
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise error.InvalidTimeGrid('Grid count must be at least 2, got {}'.format(self.count))
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or self.start < 0 or not self.stop > self.start:
            raise error.InvalidTimeGrid('Grid must satisfy 0 <= start < stop, got {}:{}'.format(self.start, self.stop))

    @classmethod
    def parse(cls, text):
        """Parses 't0:t1:n' (times in ns)."""
        parts = text.split(':')
        if len(parts) != 3:
            raise error.ParseError('grid must look like t0:t1:n, got {!r}'.format(text))
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError:
            raise error.ParseError('grid must look like t0:t1:n, got {!r}'.format(text))

    def times(self):
        return np.linspace(self.start, self.stop, self.count)

    def __str__(self):
        return '{:g}:{:g}:{:d}'.format(self.start, self.stop, self.count)


@dataclass(frozen=True)
class Scenario(object):
    """A fully specified run: parameters, initial state, grid, backend and outputs.

    Args:
        name (str): scenario identifier
        params (QubitParams): physical parameters
        initial (QubitState): amplitudes at the first grid time
        grid (TimeGrid): sample times
        mode (Mode): propagation backend
        outputs (Tuple[str, ...]): subset of populations, escape, bloch, deviation
        description (str): one-line summary for listings
    """
    name: str
    params: QubitParams
    initial: QubitState
    grid: TimeGrid
    mode: Mode = Mode.RWA
    outputs: Tuple[str, ...] = ('populations', 'escape', 'bloch')
    description: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'mode', Mode.parse(self.mode))
        outputs = tuple(self.outputs)
        unknown = [o for o in outputs if o not in OUTPUTS]
        if unknown:
            raise error.InvalidParams('Unknown scenario outputs: {}. (HINT: choose from {})'.format(', '.join(unknown), ', '.join(OUTPUTS)))
        object.__setattr__(self, 'outputs', outputs)

    @property
    def initial_bloch(self):
        return bloch(self.initial)

    def replace(self, **changes):
        values = dict(name=self.name, params=self.params, initial=self.initial, grid=self.grid,
                      mode=self.mode, outputs=self.outputs, description=self.description)
        values.update(changes)
        return Scenario(**values)


class ScenarioSpec(object):
    """A registered preset. Used to rebuild the same scenario by id and to
    check it against the parameter values it is quoted with.

    Args:
        id (str): the scenario ID
        entry_point (Optional[str]): builder returning a Scenario (e.g. module.name:function)
        quoted_values (tuple): (attribute path, value, unit) triples that the
            built scenario must reproduce after unit conversion; unit None
            compares the raw value
        description (str): one-line summary
        kwargs (dict): the kwargs to pass to the builder
    """

    def __init__(self, id, entry_point=None, quoted_values=(), description='', kwargs=None):
        self.id = id
        self.quoted_values = tuple(quoted_values)
        self.description = description

        match = scenario_id_re.search(id)
        if not match:
            raise error.Error('Attempted to register malformed scenario ID: {}. (Currently all IDs must be of the form {}.)'.format(id, scenario_id_re.pattern))
        self._scenario_name = match.group(1)
        self._entry_point = entry_point
        self._kwargs = {} if kwargs is None else kwargs

    def make(self):
        """Builds the scenario and checks it against its quoted values"""
        if self._entry_point is None:
            raise error.DeprecatedScenario('Attempting to make deprecated scenario {}. (HINT: is there a newer registered version of this scenario?)'.format(self.id))

        builder = load(self._entry_point)
        scenario = builder(**self._kwargs)
        if scenario.name != self.id:
            scenario = scenario.replace(name=self.id)
        if not scenario.description and self.description:
            scenario = scenario.replace(description=self.description)
        self.validate(scenario)
        return scenario

    def validate(self, scenario):
        for path, quoted, unit in self.quoted_values:
            actual = scenario
            for part in path.split('.'):
                actual = getattr(actual, part)
            expected = quoted if unit is None else to_canonical(quoted, unit)
            if not cmath.isclose(actual, expected, rel_tol=QUOTED_RTOL, abs_tol=QUOTED_ATOL):
                raise error.PresetMismatch('Scenario {}: {} = {!r} does not match the quoted {} {} (= {!r})'.format(
                    self.id, path, actual, quoted, unit or '', expected))

    def __repr__(self):
        return "ScenarioSpec({})".format(self.id)


class ScenarioRegistry(object):
    """Register a scenario by ID. IDs remain stable over time and always
    resolve to the same parameters, initial state and grid (or are
    desupported), so that outputs produced from an id stay comparable.
    """

    def __init__(self):
        self.scenario_specs = {}

    def make(self, id):
        logger.info('Making scenario: %s', id)
        spec = self.spec(id)
        return spec.make()

    def all(self):
        return self.scenario_specs.values()

    def spec(self, id):
        match = scenario_id_re.search(id)
        if not match:
            raise error.UnregisteredScenario('Attempted to look up malformed scenario ID: {}. (Currently all IDs must be of the form {}.)'.format(id, scenario_id_re.pattern))

        try:
            return self.scenario_specs[id]
        except KeyError:
            # Parse the scenario name and check to see if it matches the non-version
            # part of a valid scenario
            scenario_name = match.group(1)
            matching = [valid_id for valid_id, valid_spec in self.scenario_specs.items()
                        if scenario_name == valid_spec._scenario_name]
            if matching:
                raise error.DeprecatedScenario('Scenario {} not found (valid versions include {})'.format(id, matching))
            else:
                raise error.UnregisteredScenario('No registered scenario with id: {}. (HINT: run `phase-qubit presets`)'.format(id))

    def register(self, id, **kwargs):
        if id in self.scenario_specs:
            raise error.Error('Cannot re-register id: {}'.format(id))
        self.scenario_specs[id] = ScenarioSpec(id, **kwargs)

    def deregister(self, id):
        if id not in self.scenario_specs:
            logger.warning('Unable to deregister id: %s. Are you certain it is registered?', id)
        else:
            del self.scenario_specs[id]

    def list(self):
        return sorted([spec.id for spec in self.all()], key=lambda s: s.lower())

# Have a global registry
registry = ScenarioRegistry()
register = registry.register
make = registry.make
spec = registry.spec
deregister = registry.deregister
list = registry.list

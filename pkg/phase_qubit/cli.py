"""Command-line scenario runner.

    phase-qubit simulate --preset fig2-bloch --out fig2.csv
    phase-qubit simulate --params qubit.txt --initial 0,0,1,0 --grid 0:100:1001 --mode numeric
    phase-qubit fit data.csv --gamma-mean '0.204 us^-1' --gamma0 '0.4e-3 us^-1'
    phase-qubit compare --preset fast-readout-escape --backends zero-drive,printed
    phase-qubit presets

Exit codes: 0 success, 1 library error, 2 usage error, 3 I/O error,
4 parse error, 5 fit failure. Failures write a single JSON error record to
stderr and leave no partial output behind.
"""
import argparse
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from gym.utils import seeding

from phase_qubit import error, fitting, scenarios
from phase_qubit.configuration import DEFAULT_OMEGA10, OUTPUT_DIR_ENV, default_output_dir, package_logger
from phase_qubit.hamiltonians import build_zero_drive
from phase_qubit.oracle import IntegratorConfig, solve_constant
from phase_qubit.params import (PARAM_DIMENSIONS, QubitParams, load_params, parse_params, parse_quantity,
                                read_params_text, unit_convert)
from phase_qubit.propagators import Mode, deviation_F, evolve, printed_zero_drive_amplitudes
from phase_qubit.scenarios import Scenario, TimeGrid
from phase_qubit.state import QubitState, TimeSeries, bloch
from phase_qubit.version import VERSION

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_FIT = 5

NOISY_COLUMNS = ('rho11', 'rho00', 'p_esc')

# backend -> frame its amplitudes are expressed in
BACKENDS = {
    'rwa': 'rotating',
    'numeric': 'rotating',
    'lab-frame': 'lab',
    'zero-drive': 'lab',
    'zero-drive-numeric': 'lab',
    'printed': 'lab',
    'weak': 'lab',
}

DEFAULT_BACKENDS = {
    Mode.RWA: ('rwa', 'numeric'),
    Mode.NUMERIC: ('numeric', 'rwa'),
    Mode.LAB_FRAME: ('lab-frame', 'rwa'),
    Mode.ZERO_DRIVE: ('zero-drive', 'zero-drive-numeric', 'printed', 'weak'),
    Mode.WEAK: ('weak', 'zero-drive'),
}

COMPARE_CONFIG = IntegratorConfig(rel_tol=1e-13, abs_tol=1e-15)


def exit_code_for(exc):
    if isinstance(exc, error.ParseError):
        return EXIT_PARSE
    if isinstance(exc, error.FitError):
        return EXIT_FIT
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_ERROR

def error_record(exc):
    return {'error': type(exc).__name__, 'message': str(exc), 'exit_code': exit_code_for(exc)}

# ----------------------------------------------------------------------------
# Scenario construction

def parse_initial(text):
    """'c1_re,c1_im,c0_re,c0_im' -> QubitState."""
    parts = text.split(',')
    if len(parts) != 4:
        raise error.ParseError('initial state must be c1_re,c1_im,c0_re,c0_im, got {!r}'.format(text))
    try:
        c1_re, c1_im, c0_re, c0_im = (float(p) for p in parts)
    except ValueError:
        raise error.ParseError('initial state must be four numbers, got {!r}'.format(text))
    state = QubitState(complex(c1_re, c1_im), complex(c0_re, c0_im))
    if state.norm2 > 1 + 1e-12:
        logger.warning('Initial state has norm^2 %.12g > 1; normalising', state.norm2)
        state = state.normalized()
    return state

def build_scenarios(args):
    """Scenarios named by --preset, or one custom scenario, with CLI overrides applied."""
    if not args.preset:
        if args.initial is None or args.grid is None:
            raise error.InvalidParams('A custom scenario needs --initial and --grid. (HINT: or pick a --preset; see `phase-qubit presets`)')
        params = load_params(args.params) if args.params else QubitParams()
        return [Scenario('custom', params, parse_initial(args.initial), TimeGrid.parse(args.grid),
                         Mode.parse(args.mode or Mode.RWA))]

    built = [scenarios.make(preset) for preset in args.preset]
    overrides = {}
    if args.initial is not None:
        overrides['initial'] = parse_initial(args.initial)
    if args.grid is not None:
        overrides['grid'] = TimeGrid.parse(args.grid)
    if args.mode is not None:
        overrides['mode'] = Mode.parse(args.mode)
    param_text = read_params_text(args.params) if args.params else None
    result = []
    for scenario in built:
        changes = dict(overrides)
        if param_text is not None:
            # parameter files overlay each preset's own values
            changes['params'] = parse_params(param_text, base=scenario.params)
        result.append(scenario.replace(**changes) if changes else scenario)
    names = [s.name for s in result]
    if len(set(names)) != len(names):
        raise error.InvalidParams('Scenario names must be unique within a run, got {}'.format(', '.join(names)))
    return result

# ----------------------------------------------------------------------------
# simulate

def run_scenario(scenario, noise=0.0, seed=None, cfg=None):
    """Evaluates a scenario on its grid.

    Returns (TimeSeries, summary dict). With noise > 0, Gaussian readout noise
    of that width is added to the probability columns from a generator seeded
    through gym's seeding helper.
    """
    times = scenario.grid.times()
    amplitudes = evolve(scenario.initial, scenario.params, times, scenario.mode, cfg)
    extra = {}
    if 'deviation' in scenario.outputs:
        extra['deviation'] = np.asarray(deviation_F(scenario.initial, scenario.params, times))
    series = TimeSeries.from_amplitudes(times, amplitudes, extra)

    summary = {
        'scenario': scenario.name,
        'mode': scenario.mode.value,
        'grid': str(scenario.grid),
    }
    if 'bloch' in scenario.outputs:
        summary['initial_bloch'] = list(bloch(scenario.initial).as_tuple())
    if 'escape' in scenario.outputs:
        summary['final_p_esc'] = float(series.column('p_esc')[-1])
    if 'deviation' in scenario.outputs:
        summary['max_abs_deviation'] = float(np.max(np.abs(extra['deviation'])))
    if 'populations' in scenario.outputs and scenario.params.rabi0 > 0:
        try:
            rate = fitting.envelope_decay_rate(times, series.column('rho11'))
            summary['envelope_decay_rate'] = {'value': rate, 'unit': 'ns^-1', 'display': {'value': unit_convert(rate, 'ns^-1', 'us^-1'), 'unit': 'us^-1'}}
        except error.InsufficientData as e:
            logger.debug('No envelope estimate for %s: %s', scenario.name, e)

    if noise > 0:
        rng, used_seed = seeding.np_random(seed)
        noisy = {name: series.column(name) + rng.normal(0.0, noise, size=len(series)) for name in NOISY_COLUMNS}
        series = series.replace_columns(**noisy)
        summary['noise'] = {'sigma': noise, 'seed': int(used_seed)}
    logger.info('Ran scenario %s (%s) over %d points', scenario.name, scenario.mode.value, len(series))
    return series, summary

def render(series, fmt):
    return series.to_csv() if fmt == 'csv' else series.to_json()

def write_output(text, path):
    """Writes text atomically to path, or to standard output when path is None."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.phase-qubit-', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.info('Wrote %s', path)

def output_paths(names, out, fmt):
    """One output path per scenario (None for standard output)."""
    directory = None
    if out is not None:
        if len(names) == 1 and not os.path.isdir(out):
            return [out]
        directory = out
    else:
        directory = default_output_dir()
    if directory is None:
        return [None] * len(names)
    return [os.path.join(directory, '{}.{}'.format(name, fmt)) for name in names]

def simulate(args):
    built = build_scenarios(args)
    if args.seed is not None and args.noise <= 0:
        logger.warning('--seed has no effect without --noise')
    seeds = [None if args.seed is None else args.seed + i for i in range(len(built))]

    def job(item):
        scenario, seed = item
        return run_scenario(scenario, noise=args.noise, seed=seed)

    if args.jobs > 1 and len(built) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(job, zip(built, seeds)))
    else:
        results = [job(item) for item in zip(built, seeds)]

    paths = output_paths([s.name for s in built], args.out, args.format)
    for scenario, (series, _), path in zip(built, results, paths):
        text = render(series, args.format)
        if path is None and len(built) > 1 and args.format == 'csv':
            text = '# scenario: {}\n{}'.format(scenario.name, text)
        write_output(text, path)

    summaries = [summary for _, summary in results]
    write_summary(summaries[0] if len(summaries) == 1 else summaries, args.summary)
    return EXIT_OK

def write_summary(summary, path):
    text = json.dumps(summary, sort_keys=True) + '\n'
    if path is None:
        sys.stderr.write(text)
    else:
        write_output(text, path)

# ----------------------------------------------------------------------------
# fit

def _rate_flag(text, name):
    return parse_quantity(text, PARAM_DIMENSIONS[name])

def build_fit_problem(args):
    times, values, weights = fitting.load_fit_data(args.data, time_unit=args.time_unit, column=args.column)
    model = fitting.FitModel.parse(args.model)
    base = load_params(args.params) if args.params else None

    fixed = {}
    for name, flag in (('gamma_mean', args.gamma_mean), ('gamma0', args.gamma0)):
        if flag is not None:
            fixed[name] = _rate_flag(flag, name)
        elif base is not None:
            fixed[name] = getattr(base, name)
    free = list(fitting.DEFAULT_FREE[model]) if args.free is None else [n.strip() for n in args.free.split(',') if n.strip()]
    if args.fix_phase and 'phase' in free:
        free.remove('phase')
        fixed['phase'] = 0.0
    for name in free:
        fixed.pop(name, None)
    omega10 = base.omega10 if base is not None else DEFAULT_OMEGA10
    return fitting.FitProblem(times, values, weights, model=model, fixed=fixed, free=free, omega10=omega10)

def run_fit(data_path, args):
    """Fits the data file and returns the FitResult."""
    args.data = data_path
    problem = build_fit_problem(args)
    options = fitting.FitOptions(workers=args.jobs)
    return fitting.fit(problem, options)

def fit_command(args):
    result = run_fit(args.data, args)
    record = result.to_dict()
    record['model'] = fitting.FitModel.parse(args.model).value
    record['data'] = args.data
    write_output(json.dumps(record, sort_keys=True, indent=2) + '\n', args.out)
    return EXIT_OK

# ----------------------------------------------------------------------------
# compare

def backend_amplitudes(backend, scenario, times, cfg=None):
    cfg = COMPARE_CONFIG if cfg is None else cfg
    initial, params = scenario.initial, scenario.params
    if backend == 'zero-drive-numeric':
        return solve_constant(build_zero_drive(params), initial, times, cfg, 'zero-drive')
    if backend == 'printed':
        return printed_zero_drive_amplitudes(initial, params, times)
    if backend not in BACKENDS:
        raise error.InvalidParams('Unknown backend {!r}. (HINT: one of {})'.format(backend, ', '.join(sorted(BACKENDS))))
    return evolve(initial, params, times, Mode.parse(backend), cfg)

def compare_backends(scenario, backends=None, cfg=None):
    """Per-time deviations of each backend from the first one.

    Populations are compared for every pair; amplitudes only when both
    backends share a frame.
    """
    backends = list(DEFAULT_BACKENDS[scenario.mode] if backends is None else backends)
    if not backends:
        raise error.InvalidParams('No backends to compare')
    times = scenario.grid.times()
    reference = backends[0]
    base = backend_amplitudes(reference, scenario, times, cfg)
    base_pop = np.abs(base) ** 2

    comparisons = []
    for backend in backends:
        amplitudes = base if backend == reference else backend_amplitudes(backend, scenario, times, cfg)
        per_time = np.max(np.abs(np.abs(amplitudes) ** 2 - base_pop), axis=-1)
        entry = {
            'backend': backend,
            'frame': BACKENDS[backend],
            'max_population_deviation': float(np.max(per_time)),
            'per_time_population_deviation': [float(v) for v in per_time],
            'max_amplitude_deviation': None,
        }
        if BACKENDS[backend] == BACKENDS[reference]:
            entry['max_amplitude_deviation'] = float(np.max(np.abs(amplitudes - base)))
        comparisons.append(entry)
        logger.info('%s vs %s on %s: max population deviation %.3g', backend, reference, scenario.name, entry['max_population_deviation'])
    return {
        'scenario': scenario.name,
        'grid': str(scenario.grid),
        'times': [float(t) for t in times],
        'reference': reference,
        'comparisons': comparisons,
    }

def compare_command(args):
    built = build_scenarios(args)
    backends = None if args.backends is None else [b.strip() for b in args.backends.split(',') if b.strip()]
    cfg = IntegratorConfig(rel_tol=args.rtol, abs_tol=args.atol)
    reports = [compare_backends(scenario, backends, cfg) for scenario in built]
    write_output(json.dumps(reports[0] if len(reports) == 1 else reports, sort_keys=True) + '\n', args.out)
    return EXIT_OK

# ----------------------------------------------------------------------------
# presets

def presets_command(args):
    entries = []
    for scenario_id in scenarios.list():
        spec = scenarios.spec(scenario_id)
        entries.append({
            'id': spec.id,
            'description': spec.description,
            'quoted_values': [{'name': path, 'value': value, 'unit': unit} for path, value, unit in spec.quoted_values],
        })
    if args.format == 'json':
        text = json.dumps(entries, sort_keys=True, indent=2) + '\n'
    else:
        width = max(len(e['id']) for e in entries)
        text = ''.join('{}  {}\n'.format(e['id'].ljust(width), e['description']) for e in entries)
    write_output(text, args.out)
    return EXIT_OK

# ----------------------------------------------------------------------------
# Entry point

def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError('must be a non-negative integer, got {}'.format(text))
    return value

def _non_negative_float(text):
    value = float(text)
    if not (value >= 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError('must be a finite non-negative number, got {}'.format(text))
    return value

def _add_scenario_arguments(parser):
    parser.add_argument('--preset', action='append', help='Registered scenario id (repeatable)')
    parser.add_argument('--params', help='Parameter file of `key = value [unit]` lines')
    parser.add_argument('--initial', help='Initial amplitudes c1_re,c1_im,c0_re,c0_im')
    parser.add_argument('--grid', help='Time grid t0:t1:n in ns')
    parser.add_argument('--mode', choices=[m.value for m in Mode], help='Propagation backend')

def build_parser():
    parser = argparse.ArgumentParser(prog='phase-qubit', description='Phase-qubit tunneling measurement scenarios')
    parser.add_argument('--version', action='version', version='%(prog)s ' + VERSION)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    sim = sub.add_parser('simulate', help='Evaluate a scenario on its time grid')
    _add_scenario_arguments(sim)
    sim.add_argument('--format', choices=('csv', 'json'), default='csv')
    sim.add_argument('--out', help='Output file (one scenario) or directory; defaults to ${} or stdout'.format(OUTPUT_DIR_ENV))
    sim.add_argument('--noise', type=_non_negative_float, default=0.0, help='Gaussian readout noise added to the probability columns')
    sim.add_argument('--seed', type=_non_negative_int, help='Seed for --noise')
    sim.add_argument('--jobs', type=int, default=1, help='Scenarios evaluated concurrently')
    sim.add_argument('--summary', help='Write the JSON summary here instead of stderr')
    sim.set_defaults(func=simulate)

    fit = sub.add_parser('fit', help='Fit Ω₀ and Δ to measured probabilities')
    fit.add_argument('data', help='CSV with t,p[,weight] or a simulate time series')
    fit.add_argument('--model', default='eq10_special', help='eq10_special (C1(0) = 0) or eq8_general')
    fit.add_argument('--params', help='Parameter file supplying gamma_mean, gamma0 and omega10')
    fit.add_argument('--gamma-mean', dest='gamma_mean', help="Fixed mean tunneling rate, e.g. '0.204 us^-1'")
    fit.add_argument('--gamma0', help="Fixed lower-level tunneling rate, e.g. '0.4e-3 us^-1'")
    fit.add_argument('--free', help='Comma-separated parameters to fit (default per model)')
    fit.add_argument('--fix-phase', action='store_true', help='Hold the initial relative phase at 0 (eq8_general)')
    fit.add_argument('--time-unit', dest='time_unit', help='Time unit of the data file (overrides `# unit:`)')
    fit.add_argument('--column', default='rho11', help='Column of a simulate time series to fit')
    fit.add_argument('--jobs', type=int, default=1, help='Seeds fitted concurrently')
    fit.add_argument('--out', help='Output file (default stdout)')
    fit.set_defaults(func=fit_command, format='json')

    cmp = sub.add_parser('compare', help='Compare propagation backends on a scenario')
    _add_scenario_arguments(cmp)
    cmp.add_argument('--backends', help='Comma-separated backends, the first is the reference ({})'.format(', '.join(sorted(BACKENDS))))
    cmp.add_argument('--rtol', type=float, default=COMPARE_CONFIG.rel_tol)
    cmp.add_argument('--atol', type=float, default=COMPARE_CONFIG.abs_tol)
    cmp.add_argument('--out', help='Output file (default stdout)')
    cmp.set_defaults(func=compare_command, format='json')

    pre = sub.add_parser('presets', help='List registered scenarios')
    pre.add_argument('--format', choices=('text', 'json'), default='text')
    pre.add_argument('--out', help='Output file (default stdout)')
    pre.set_defaults(func=presets_command)
    return parser

def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        package_logger.setLevel(logging.DEBUG)
    elif args.quiet:
        package_logger.setLevel(logging.WARNING)

    try:
        return args.func(args)
    except (error.Error, OSError) as e:
        record = error_record(e)
        if isinstance(e, error.FitFailed):
            record['diagnostics'] = e.diagnostics
        logger.debug('Command %s failed', args.command, exc_info=True)
        sys.stderr.write(json.dumps(record, sort_keys=True) + '\n')
        return record['exit_code']

if __name__ == '__main__':
    sys.exit(main())

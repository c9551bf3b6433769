import logging

from phase_qubit import error
from phase_qubit.configuration import logger_setup, undo_logger_setup

logger = logging.getLogger(__name__)

# Do this before importing any other phase_qubit modules, as most of them import some
# dependencies themselves.
def sanity_check_dependencies():
    import numpy
    import scipy
    from numpy.lib import NumpyVersion

    if NumpyVersion(numpy.__version__) < '1.17.0':
        logger.warning("You have 'numpy' version %s installed, but 'phase_qubit' requires at least 1.17.0. HINT: upgrade via 'pip install -U numpy'.", numpy.__version__)

    if NumpyVersion(scipy.__version__) < '1.1.0':
        logger.warning("You have 'scipy' version %s installed, but 'phase_qubit' requires at least 1.1.0. HINT: upgrade via 'pip install -U scipy'.", scipy.__version__)

# We automatically configure a logger with a simple stderr handler. If
# you'd rather customize logging yourself, run undo_logger_setup.
#
# (Note: this needs to happen before importing the rest of phase_qubit, since
# we may print a warning at load time.)
logger_setup()
del logger_setup

sanity_check_dependencies()

from phase_qubit.params import QubitParams, derive_rwa, load_params, unit_convert
from phase_qubit.state import BlochState, QubitState, TimeSeries, bloch, bloch_to_density, populations
from phase_qubit.hamiltonians import build_lab_frame, build_rwa, build_zero_drive
from phase_qubit.propagators import (Mode, deviation_F, double_exponential_escape, escape_probability, evolve,
                                     rwa_amplitudes, rwa_populations, upper_population_special,
                                     weak_coupling_state, zero_drive_amplitudes)
from phase_qubit.oracle import IntegratorConfig, expm_const, integrate
from phase_qubit.fitting import FitModel, FitProblem, FitResult, fit, residuals
from phase_qubit.scenarios import make, spec, list

__all__ = [
    "BlochState", "FitModel", "FitProblem", "FitResult", "IntegratorConfig", "Mode", "QubitParams", "QubitState",
    "TimeSeries", "bloch", "bloch_to_density", "build_lab_frame", "build_rwa", "build_zero_drive", "derive_rwa",
    "deviation_F", "double_exponential_escape", "escape_probability", "evolve", "expm_const", "fit", "integrate",
    "list", "load_params", "make", "populations", "residuals", "rwa_amplitudes", "rwa_populations", "spec",
    "undo_logger_setup", "unit_convert", "upper_population_special", "weak_coupling_state", "zero_drive_amplitudes",
]

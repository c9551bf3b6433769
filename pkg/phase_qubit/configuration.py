"""Package logging setup and module-level constants."""
import logging
import math
import os
import sys

logger = logging.getLogger(__name__)

root_logger = logging.getLogger()

# Should be "phase_qubit"
package_name = '.'.join(__name__.split('.')[:-1])
package_logger = logging.getLogger(package_name)

formatter = logging.Formatter('[%(asctime)s] %(message)s')
handler = logging.StreamHandler(sys.stderr)
handler.setFormatter(formatter)

# Largest |Im(z)| accepted by the complex trigonometric closed forms
OVERFLOW_BOUND = 700.0

# Floating-point dust below this magnitude is clipped out of reported probabilities
REPORT_EPS = 1e-12

# ω₁₀/2π = 5 GHz, in rad/ns
DEFAULT_OMEGA10 = 2 * math.pi * 5.0

OUTPUT_DIR_ENV = 'PHASE_QUBIT_OUTPUT_DIR'

def logger_setup():
    root_logger.addHandler(handler)
    package_logger.setLevel(logging.INFO)

def undo_logger_setup():
    """Undoes the automatic logging setup done at import time.

    Call this if you want to configure logging yourself, e.g. when
    embedding the library in an application with its own handlers.
    """
    root_logger.removeHandler(handler)
    package_logger.setLevel(logging.NOTSET)

def default_output_dir():
    """Returns the directory named by PHASE_QUBIT_OUTPUT_DIR, or None."""
    path = os.environ.get(OUTPUT_DIR_ENV)
    if not path:
        return None
    return path

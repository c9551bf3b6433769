"""Exceptions raised by phase_qubit; every one derives from Error."""

class Error(Exception):
    pass

# Parameters and units

class InvalidParams(Error):
    """Raised when a parameter set violates its invariants (negative rate,
    Γ₀₁² > Γ₀Γ₁, non-positive tolerance, ...).

    Attributes:
        name (Optional[str]): the offending parameter, when a single one is at fault
    """
    def __init__(self, message, name=None):
        super(InvalidParams, self).__init__(message)
        self.name = name

class UnitError(Error):
    """Raised on an unknown unit tag or a dimensionally inconsistent
    conversion."""
    pass

class ParseError(Error):
    """Raised when a parameter file or data file cannot be parsed.

    Attributes:
        line (Optional[int]): 1-based line (or row) number of the offending input
    """
    def __init__(self, message, line=None):
        if line is not None:
            message = 'line {}: {}'.format(line, message)
        super(ParseError, self).__init__(message)
        self.line = line

# States and grids

class InvalidState(Error):
    pass

class InvalidTimeGrid(Error):
    pass

# Propagation

class ExceptionalPoint(Error):
    """Raised when the complex Rabi frequency vanishes and the generator is
    not diagonalizable."""
    pass

class PropagationOverflow(Error):
    """Raised when |Im Ω|·t exceeds the overflow bound of the complex
    trigonometric evaluation."""
    pass

class UndefinedDeviation(Error):
    """Raised when the reference population of F(t) is zero."""
    pass

class IntegrationError(Error):
    pass

class StepLimitExceeded(IntegrationError):
    pass

class StepUnderflow(IntegrationError):
    pass

class NonFiniteState(IntegrationError):
    pass

# Fitting

class FitError(Error):
    pass

class InsufficientData(FitError):
    pass

class FitFailed(FitError):
    """Raised when no seed of a multi-start fit converges.

    Attributes:
        diagnostics (list): one dict per seed (seed index, status, message, cost)
    """
    def __init__(self, message, diagnostics=None):
        super(FitFailed, self).__init__(message)
        self.diagnostics = [] if diagnostics is None else diagnostics

# Scenario registry

class UnregisteredScenario(Error):
    pass

class DeprecatedScenario(Error):
    pass

class PresetMismatch(Error):
    pass

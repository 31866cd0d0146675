"""Exception hierarchy shared by the whole package.

Validation problems (bad arguments, inconsistent shapes, domain violations)
derive from ConfigurationError.  Runtime breakdowns detected by numerical
monitors derive from NumericalDiagnostic.  The CLI maps these onto distinct
exit codes.
"""


class ConfigurationError(ValueError):
    """Invalid parameters or inputs detected before any computation runs."""


class DomainError(ConfigurationError):
    """Argument outside the mathematical domain of an operator."""


class AliasingError(ConfigurationError):
    """Grid too small to represent a product without aliasing."""


class NumericalDiagnostic(RuntimeError):
    """A monitored quantity left its trusted range mid-computation."""


class BlowUpError(NumericalDiagnostic):
    """Solution norm grew past the blow-up threshold."""


class SingularityError(NumericalDiagnostic):
    """Trajectory approached a pole collision or the real axis."""


class SupportCollapseError(NumericalDiagnostic):
    """A density lost strict positivity where it is required."""

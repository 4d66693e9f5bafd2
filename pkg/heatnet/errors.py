"""
Exception hierarchy for heatnet.

Every error carries a machine-readable reason code and the process exit
code the CLI uses when the error escapes a command.
"""
from typing import Any, Dict


class HeatnetError(Exception):
    """Base class for all heatnet failures"""
    exit_code: int = 1
    reason: str = "error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        """Serializable error record for stderr reporting"""
        payload: Dict[str, Any] = {
            "error": self.reason,
            "message": str(self),
            "exit_code": self.exit_code,
        }
        for key, value in self.details.items():
            payload[key] = value if isinstance(value, (int, float, str, bool, type(None))) else str(value)
        return payload


class ConfigError(HeatnetError):
    """Configuration document could not be read or parsed"""
    exit_code = 2
    reason = "config_parse"


class NetworkValidationError(HeatnetError):
    """Physical parameters are inconsistent"""
    exit_code = 3
    reason = "validation"


class UnstableNetworkError(NetworkValidationError):
    """Static potential has a nonpositive eigenvalue"""
    reason = "unstable_network"


class SolverError(HeatnetError):
    """Numerical failure inside a solver"""
    exit_code = 4
    reason = "solver"


class DomainError(SolverError):
    reason = "domain"


class SingularGreenError(SolverError):
    """Green's function matrix is numerically singular or has an undamped pole"""
    reason = "singular_green"


class QuadratureError(SolverError):
    """Frequency integral did not converge; carries the achieved estimate"""
    reason = "quadrature"


class FloquetInstabilityError(SolverError):
    """No periodic steady state (parametric resonance)"""
    reason = "unstable"


class TruncationError(SolverError):
    reason = "order_too_small"


class UnsupportedHarmonicsError(SolverError):
    reason = "unsupported_harmonics"


class NoTransportError(SolverError):
    reason = "no_transport"


class TransistorUndefinedError(SolverError):
    reason = "transistor_undefined"


class BoundViolationError(SolverError):
    reason = "bound_violation"


class HorizonError(SolverError):
    reason = "horizon"


class StepSizeError(SolverError):
    reason = "step_size"


class ParameterError(SolverError):
    reason = "parameter"


class OutputError(HeatnetError):
    """Result files could not be written"""
    exit_code = 5
    reason = "io"

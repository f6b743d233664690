"""sigma2-lab: numerical verification of sigma2-curvature identities on model manifolds."""

__version__ = "0.1.0"

# Export main exception classes for easy access
from .exceptions import (
    ConfigurationError,
    ConfigurationNotFoundError,
    GeometryError,
    InvalidConfigurationError,
    JetError,
    ModelError,
    NotEinsteinError,
    OperatorError,
    QuadratureError,
    Sigma2LabError,
    UnknownIdentityError,
    UnknownModelError,
    ValidationError,
)
from .status import ReportStatus

__all__ = [
    "ConfigurationError",
    "ConfigurationNotFoundError",
    "GeometryError",
    "InvalidConfigurationError",
    "JetError",
    "ModelError",
    "NotEinsteinError",
    "OperatorError",
    "QuadratureError",
    "ReportStatus",
    "Sigma2LabError",
    "UnknownIdentityError",
    "UnknownModelError",
    "ValidationError",
]

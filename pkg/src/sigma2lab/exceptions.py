"""Custom exceptions for sigma2-lab."""


class Sigma2LabError(Exception):
    """Base exception for all sigma2-lab errors."""

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class JetError(Sigma2LabError):
    """Base class for jet arithmetic errors."""


class JetShapeError(JetError):
    """Raised when jets of different dimension or order are combined."""


class JetOrderError(JetError):
    """Raised when a jet order is out of range or too low for an operation."""

    def __init__(self, message: str, order: int | None = None):
        super().__init__(message, {"order": order} if order is not None else None)
        self.order = order


class JetDomainError(JetError):
    """Raised when an elementary function is composed outside its domain."""

    def __init__(self, function: str, reason: str):
        super().__init__(f"Cannot compose '{function}': {reason}")
        self.function = function
        self.reason = reason


class GeometryError(Sigma2LabError):
    """Base class for chart and curvature errors."""


class ChartDomainError(GeometryError):
    """Raised when a point lies outside the domain of a chart."""

    def __init__(self, chart_name: str, reason: str):
        super().__init__(f"Point outside chart '{chart_name}': {reason}")
        self.chart_name = chart_name
        self.reason = reason


class MetricNotPositiveDefiniteError(GeometryError):
    """Raised when the metric fails to be symmetric positive definite at a point."""

    def __init__(self, smallest_eigenvalue: float, chart_name: str | None = None):
        where = f" on chart '{chart_name}'" if chart_name else ""
        message = f"Metric is not positive definite{where} (smallest eigenvalue {smallest_eigenvalue:.3e})"
        super().__init__(message, {"smallest_eigenvalue": smallest_eigenvalue})
        self.smallest_eigenvalue = smallest_eigenvalue
        self.chart_name = chart_name


class InsufficientOrderError(GeometryError):
    """Raised when an operator needs more jet orders than its input carries."""

    def __init__(self, operation: str, required: int, available: int):
        message = f"'{operation}' needs jet order {required}, got {available}"
        super().__init__(message, {"required": required, "available": available})
        self.operation = operation
        self.required = required
        self.available = available


class OperatorError(Sigma2LabError):
    """Base class for curvature operator errors."""


class NotEinsteinError(OperatorError):
    """Raised when an Einstein-only formula is applied to a non-Einstein frame."""

    def __init__(self, traceless_norm: float):
        message = f"Frame is not Einstein (max |traceless Ricci| = {traceless_norm:.3e})"
        super().__init__(message, {"traceless_norm": traceless_norm})
        self.traceless_norm = traceless_norm


class RearrangementMismatchError(OperatorError):
    """Raised when equivalent forms of the same residual disagree."""

    def __init__(self, residual: str, mismatch: float):
        super().__init__(f"Equivalent forms of '{residual}' disagree by {mismatch:.3e}")
        self.residual = residual
        self.mismatch = mismatch


class ModelError(Sigma2LabError):
    """Base class for model catalog errors."""


class UnknownModelError(ModelError):
    """Raised when a model name is not in the catalog."""

    def __init__(self, model_name: str):
        super().__init__(f"Unknown model: '{model_name}'")
        self.model_name = model_name


class ModelValidationError(ModelError):
    """Raised when a model's closed-form table disagrees with computed curvature."""

    def __init__(self, model_name: str, reason: str):
        super().__init__(f"Model '{model_name}' failed self-validation: {reason}")
        self.model_name = model_name
        self.reason = reason


class QuadratureError(Sigma2LabError):
    """Base class for integration errors."""


class NonClosedModelError(QuadratureError):
    """Raised when integration is requested on an open chart."""

    def __init__(self, model_name: str):
        super().__init__(f"Model '{model_name}' is not closed; integration refused")
        self.model_name = model_name


class GridMismatchError(QuadratureError):
    """Raised when a grid does not fit the model or fields it is used with."""


class StencilError(QuadratureError):
    """Raised when a finite-difference stencil leaves the chart domain."""

    def __init__(self, chart_name: str, step: float):
        super().__init__(f"Finite-difference stencil with step {step:g} leaves chart '{chart_name}'")
        self.chart_name = chart_name
        self.step = step


class ConfigurationError(Sigma2LabError):
    """Raised when there's an issue with configuration."""


class ConfigurationNotFoundError(ConfigurationError):
    """Raised when configuration file is not found."""

    def __init__(self, config_path: str):
        super().__init__(f"Configuration file not found: {config_path}")
        self.config_path = config_path


class InvalidConfigurationError(ConfigurationError):
    """Raised when configuration file is invalid."""

    def __init__(self, message: str, config_path: str | None = None, line: int | None = None):
        super().__init__(message)
        self.config_path = config_path
        self.line = line


class ValidationError(Sigma2LabError):
    """Raised when validation fails."""

    def __init__(
        self,
        message: str,
        field: str | None = None,
        value: str | None = None,
        line: int | None = None,
    ):
        super().__init__(message)
        self.field = field
        self.value = value
        self.line = line


class UnknownIdentityError(ConfigurationError):
    """Raised when an identity id is not known to the suite."""

    def __init__(self, identity: str):
        super().__init__(f"Unknown identity: '{identity}'")
        self.identity = identity

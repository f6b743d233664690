"""Identity report status enumeration and utilities."""

import math
from enum import StrEnum, auto


class ReportStatus(StrEnum):
    """Outcome of one identity check."""

    PASS = auto()
    FAIL = auto()
    SKIPPED = auto()
    ERROR = auto()

    @classmethod
    def from_residual(cls, residual: float, tolerance: float) -> "ReportStatus":
        """Classify a residual against its tolerance.

        A residual passes exactly when it is finite and not larger than the tolerance.
        NaN and infinite residuals always fail.
        """
        if math.isfinite(residual) and residual <= tolerance:
            return cls.PASS
        return cls.FAIL

    @property
    def is_success(self) -> bool:
        """Check if this status does not count against the exit code."""
        return self in (self.PASS, self.SKIPPED)  # type: ignore[comparison-overlap]

    @property
    def is_failure(self) -> bool:
        """Check if this status represents a failed or crashed check."""
        return self in (self.FAIL, self.ERROR)  # type: ignore[comparison-overlap]

    def to_colored_string(self) -> str:
        """Get a colored string representation using ANSI codes."""
        match self:
            case self.PASS:
                return "\033[92m[OK] PASS\033[0m"  # Green
            case self.SKIPPED:
                return "\033[93m[SKIP] SKIPPED\033[0m"  # Yellow
            case self.FAIL:
                return "\033[91m[FAIL] FAIL\033[0m"  # Red
            case self.ERROR:
                return "\033[91m[ERROR] ERROR\033[0m"  # Red
            case _:
                return f"[UNKNOWN] {self.value.upper()}"

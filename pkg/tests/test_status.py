"""Tests for the status module."""

import math

import pytest

from sigma2lab.status import ReportStatus


class TestReportStatus:
    """Test the ReportStatus enumeration."""

    def test_values(self):
        """Test the lowercase JSON values."""
        assert [status.value for status in ReportStatus] == ["pass", "fail", "skipped", "error"]

    @pytest.mark.parametrize(
        ("residual", "expected"),
        [
            (0.0, ReportStatus.PASS),
            (1e-9, ReportStatus.PASS),
            (2e-9, ReportStatus.FAIL),
            (math.nan, ReportStatus.FAIL),
            (math.inf, ReportStatus.FAIL),
        ],
    )
    def test_from_residual(self, residual, expected):
        """Test classification against a tolerance of 1e-9."""
        assert ReportStatus.from_residual(residual, 1e-9) is expected

    def test_success_and_failure(self):
        """Test that skipped checks count as success."""
        assert ReportStatus.PASS.is_success
        assert ReportStatus.SKIPPED.is_success
        assert ReportStatus.FAIL.is_failure
        assert ReportStatus.ERROR.is_failure
        assert not ReportStatus.SKIPPED.is_failure

    def test_colored_string(self):
        """Test the colored labels."""
        assert "[OK] PASS" in ReportStatus.PASS.to_colored_string()
        assert "[SKIP] SKIPPED" in ReportStatus.SKIPPED.to_colored_string()
        assert ReportStatus.ERROR.to_colored_string().startswith("\033[91m")

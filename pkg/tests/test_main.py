"""Tests for the main CLI module."""

import json
from unittest.mock import Mock, patch

import pytest
import yaml
from click.testing import CliRunner

from sigma2lab.main import cli


@pytest.fixture
def runner():
    """Create a Click CLI runner."""
    return CliRunner()


@pytest.fixture
def quick_config_file(temp_dir, sample_config_data):
    """A configuration that runs two cheap identities on two models."""
    config_path = temp_dir / "quick.yaml"
    data = {**sample_config_data, "identities": ["sigma2-known", "sigma2-schouten"]}
    config_path.write_text(yaml.dump(data, sort_keys=False))
    return config_path


class TestCLI:
    """Test the main CLI interface."""

    def test_cli_help(self, runner):
        """Test CLI help output."""
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        for command in ("curvature", "identities", "adjoint", "kernel", "suite", "init", "validate"):
            assert command in result.output

    def test_cli_version(self, runner):
        """Test CLI version output."""
        with patch("sigma2lab.main.__version__", "1.0.0"):
            result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "1.0.0" in result.output

    def test_cli_verbose_flag(self, runner):
        """Test CLI verbose flag."""
        with (
            patch("sigma2lab.main.configure_logging") as mock_configure,
            patch("sigma2lab.main.get_config_path") as mock_get_config_path,
        ):
            mock_config_path = Mock()
            mock_config_path.exists.return_value = True
            mock_get_config_path.return_value = mock_config_path

            result = runner.invoke(cli, ["--verbose", "init"])
        assert result.exit_code == 0
        mock_configure.assert_called_with(verbose=True)


class TestCurvatureCommand:
    """Test the curvature command."""

    def test_three_sphere_json(self, runner):
        """Test the invariants of the unit 3-sphere."""
        result = runner.invoke(cli, ["curvature", "-m", "s3_r1", "-p", "1.0,1.2,0.7", "--json"])
        assert result.exit_code == 0, result.output
        summary = json.loads(result.stdout)
        assert summary["scalar_curvature"] == pytest.approx(6.0)
        assert summary["sigma2"] == pytest.approx(0.75)
        assert summary["sigma2_schouten"] == pytest.approx(0.75)
        assert summary["ricci_eigenvalues"] == pytest.approx([2.0, 2.0, 2.0])
        assert summary["einstein"] is True

    def test_product_text(self, runner):
        """Test the text output on the non-Einstein product."""
        result = runner.invoke(cli, ["curvature", "-m", "s2xs2_r1_r2", "-p", "1.0,2.0,1.5,0.5"])
        assert result.exit_code == 0, result.output
        assert "Einstein          = no" in result.stdout

    def test_point_outside_chart(self, runner):
        """Test a point on the excluded pole."""
        result = runner.invoke(cli, ["curvature", "-m", "s3_r1", "-p", "0.0,1.0,1.0"])
        assert result.exit_code == 2

    @pytest.mark.parametrize("point", ["1.0,abc,0.5", "1.0,1.0"])
    def test_bad_point(self, runner, point):
        """Test unparsable points and wrong coordinate counts."""
        result = runner.invoke(cli, ["curvature", "-m", "s3_r1", "-p", point])
        assert result.exit_code == 2

    def test_unknown_model(self, runner):
        """Test a model outside the catalog."""
        result = runner.invoke(cli, ["curvature", "-m", "klein_bottle", "-p", "1,1"])
        assert result.exit_code == 2

    def test_invalid_parameter(self, runner):
        """Test a model parameter that cannot be built."""
        result = runner.invoke(cli, ["curvature", "-m", "s2_r1", "-p", "1,1", "--param", "radius=-1"])
        assert result.exit_code == 2


class TestIdentitiesCommand:
    """Test the identities command."""

    def test_selected_identity(self, runner):
        """Test running one identity on one model."""
        result = runner.invoke(
            cli, ["identities", "-m", "s3_r1", "-i", "sigma2-known", "--points", "3", "--json", "--seed", "5"]
        )
        assert result.exit_code == 0, result.output
        bundle = json.loads(result.stdout)
        assert bundle["seed"] == 5
        assert [report["identity"] for report in bundle["reports"]] == ["sigma2-known"]
        assert bundle["reports"][0]["pass"] is True

    def test_tolerance_override_fails(self, runner):
        """Test that a tightened tolerance turns the run into a failure."""
        result = runner.invoke(
            cli,
            [
                "identities",
                "-m",
                "s2xs2_r1_r2",
                "-i",
                "control-trace-of-one",
                "--points",
                "3",
                "--tol",
                "control-trace-of-one=1e-6",
            ],
        )
        assert result.exit_code == 1
        assert "[FAIL] FAIL" in result.stdout

    @pytest.mark.parametrize("tol", ["no-such-identity=1e-6", "sigma2-known=abc", "sigma2-known=0"])
    def test_bad_tolerance(self, runner, tol):
        """Test rejection of malformed tolerance overrides."""
        result = runner.invoke(cli, ["identities", "-m", "s3_r1", "--tol", tol])
        assert result.exit_code == 2

    def test_requested_but_inapplicable(self, runner):
        """Test that an explicitly requested inapplicable identity is reported as skipped."""
        result = runner.invoke(cli, ["identities", "-m", "flat_torus2", "-i", "sphere-kernel", "--json"])
        assert result.exit_code == 0, result.output
        (report,) = json.loads(result.stdout)["reports"]
        assert report["status"] == "skipped"
        assert report["max_residual"] is None

    def test_missing_config(self, runner, temp_dir):
        """Test a configuration file that does not exist."""
        result = runner.invoke(cli, ["identities", "-m", "s3_r1", "-c", str(temp_dir / "missing.yaml")])
        assert result.exit_code == 2


class TestAdjointAndKernelCommands:
    """Test the grid-based commands."""

    def test_adjoint_needs_closed_model(self, runner):
        """Test that adjointness is refused on an open model."""
        result = runner.invoke(cli, ["adjoint", "-m", "euclidean2"])
        assert result.exit_code == 2

    def test_kernel_needs_sphere(self, runner):
        """Test that the kernel checks are refused on a torus."""
        result = runner.invoke(cli, ["kernel", "-m", "perturbed_torus"])
        assert result.exit_code == 2

    def test_bad_grid(self, runner):
        """Test an unparsable grid."""
        result = runner.invoke(cli, ["kernel", "-m", "s2_r1", "-g", "16xabc"])
        assert result.exit_code == 2

    @pytest.mark.slow
    def test_kernel_on_sphere(self, runner):
        """Test the kernel checks on the unit 2-sphere."""
        result = runner.invoke(cli, ["kernel", "-m", "s2_r1", "-g", "16x32", "--json"])
        assert result.exit_code == 0, result.output
        bundle = json.loads(result.stdout)
        assert bundle["summary"]["fail"] == 0

    @pytest.mark.slow
    def test_adjoint_on_flat_torus(self, runner):
        """Test the adjoint checks on the flat 2-torus."""
        result = runner.invoke(cli, ["adjoint", "-m", "flat_torus2", "-g", "16x16", "--pairs", "2"])
        assert result.exit_code == 0, result.output


class TestSuiteCommand:
    """Test the suite command."""

    def test_suite_is_deterministic(self, runner, quick_config_file):
        """Test that two runs give identical JSON bundles."""
        first = runner.invoke(cli, ["suite", "-c", str(quick_config_file), "--json"])
        second = runner.invoke(cli, ["suite", "-c", str(quick_config_file), "--json"])
        assert first.exit_code == 0, first.output
        assert first.stdout == second.stdout
        bundle = json.loads(first.stdout)
        assert bundle["seed"] == 7
        assert [report["model"] for report in bundle["reports"]] == ["flat_torus2"] * 2 + ["s2_stereo"] * 2

    def test_suite_output_file(self, runner, quick_config_file, temp_dir):
        """Test writing the bundle to a file with timings."""
        output = temp_dir / "bundle.json"
        result = runner.invoke(cli, ["suite", "-c", str(quick_config_file), "-o", str(output), "--timings"])
        assert result.exit_code == 0, result.output
        assert "Summary: 4 passed" in result.stdout
        bundle = json.loads(output.read_text())
        assert all("wall_time_ms" in report for report in bundle["reports"])

    def test_suite_seed_override(self, runner, quick_config_file):
        """Test that --seed overrides the configuration file."""
        result = runner.invoke(cli, ["suite", "-c", str(quick_config_file), "--seed", "11", "--json"])
        assert json.loads(result.stdout)["seed"] == 11

    def test_suite_missing_config(self, runner, temp_dir):
        """Test suite with an explicit config file that does not exist."""
        result = runner.invoke(cli, ["suite", "-c", str(temp_dir / "missing.yaml")])
        assert result.exit_code == 2
        assert "sigma2-lab init" in result.output

    def test_suite_invalid_config(self, runner, temp_dir):
        """Test suite with a config file that fails validation."""
        config_path = temp_dir / "sigma2lab.yaml"
        config_path.write_text("models:\n  - torus7\n")
        result = runner.invoke(cli, ["suite", "-c", str(config_path)])
        assert result.exit_code == 2


class TestInitAndValidate:
    """Test the init and validate commands."""

    def test_init_then_validate(self, runner, temp_dir):
        """Test that the generated sample configuration validates."""
        with runner.isolated_filesystem(temp_dir=temp_dir):
            result = runner.invoke(cli, ["init"])
            assert result.exit_code == 0, result.output
            with open("sigma2lab.yaml") as f:
                data = yaml.safe_load(f)
            assert data["seed"] == 42
            assert "s2xs2_r1_r2" in data["models"]

            result = runner.invoke(cli, ["--verbose", "validate"])
            assert result.exit_code == 0, result.output
            assert "Models: 7" in result.output

    def test_init_keeps_existing_file(self, runner, sample_config_file):
        """Test that init never overwrites a configuration."""
        before = sample_config_file.read_text()
        result = runner.invoke(cli, ["init", "-c", str(sample_config_file)])
        assert result.exit_code == 0
        assert sample_config_file.read_text() == before

    def test_validate_missing(self, runner, temp_dir):
        """Test validation of a missing file."""
        result = runner.invoke(cli, ["validate", "-c", str(temp_dir / "missing.yaml")])
        assert result.exit_code == 2
        assert "sigma2-lab init" in result.output

    def test_validate_schema_error(self, runner, temp_dir):
        """Test validation of a file that violates the schema."""
        config_path = temp_dir / "sigma2lab.yaml"
        config_path.write_text("seed: 1\nworkers: 0\n")
        result = runner.invoke(cli, ["validate", "-c", str(config_path)])
        assert result.exit_code == 2

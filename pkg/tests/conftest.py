"""Common test fixtures and utilities."""

import tempfile
from pathlib import Path

import numpy as np
import pytest
import yaml

from sigma2lab.models import get_model


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng():
    """A seeded generator so every test draws the same inputs."""
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def s2_model():
    return get_model("s2_r1")


@pytest.fixture(scope="session")
def s3_model():
    return get_model("s3_r1")


@pytest.fixture(scope="session")
def product_model():
    """The non-Einstein product S^2(1) x S^2(2)."""
    return get_model("s2xs2_r1_r2")


@pytest.fixture(scope="session")
def torus_model():
    return get_model("perturbed_torus")


@pytest.fixture(scope="session")
def flat_model():
    return get_model("flat_torus3")


@pytest.fixture
def sample_config_data():
    """A small, fast suite configuration."""
    return {
        "seed": 7,
        "workers": 1,
        "points": 4,
        "functions": 2,
        "pairs": 2,
        "models": ["flat_torus2", "s2_stereo"],
        "tolerances": {"sigma2-known": 1.0e-9},
        "resolutions": {"flat_torus2": [16, 16]},
    }


@pytest.fixture
def sample_config_file(temp_dir, sample_config_data):
    """Create a sample configuration file."""
    config_path = temp_dir / "sigma2lab.yaml"
    with open(config_path, "w") as f:
        yaml.dump(sample_config_data, f, sort_keys=False)
    return config_path
